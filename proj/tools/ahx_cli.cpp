// Command-line runner: ahx [run] <subcommand> [scenario.json] [--scenario path] [--out dir]
// [--threads k] [--seed u64]. Exit codes: 0 success, 1 usage, 2 scenario schema violation,
// 3 numerical failure (the failing operation is named on stderr).

#include "ahx/ahx.h"

#include "CLI11.hpp"

#include <cstdio>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitSchema = 2;
constexpr int kExitNumerical = 3;

std::string subcommand_list() {
  std::string s;
  for (size_t i = 0; i < ahx_subcommand_count(); ++i) s += (i ? ", " : "") + std::string(ahx_subcommand_name(i));
  return s;
}

bool known_subcommand(const std::string& name) {
  for (size_t i = 0; i < ahx_subcommand_count(); ++i) {
    if (name == ahx_subcommand_name(i)) return true;
  }
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiment runner for projectively compactified X-ray transforms"};
  app.footer("Subcommands: " + subcommand_list());
  std::vector<std::string> positional;
  std::string scenario_path, out_dir;
  int threads = 1;
  uint64_t seed = 0;
  app.add_option("args", positional, "[run] <subcommand> [scenario.json]");
  app.add_option("--scenario", scenario_path, "Scenario JSON file");
  app.add_option("--out", out_dir, "Output directory (default: the scenario's)");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Seed for random samples and probes");
  app.add_flag_callback("--version", [] {
    std::printf("ahx %s\n", ahx_version());
    throw CLI::Success();
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (!positional.empty() && positional.front() == "run") positional.erase(positional.begin());
  if (positional.empty() || positional.size() > 2) {
    std::fprintf(stderr, "usage: ahx [run] <subcommand> [scenario.json] [--scenario path]\n");
    return kExitUsage;
  }
  const std::string sub = positional[0];
  if (!known_subcommand(sub)) {
    std::fprintf(stderr, "unknown subcommand '%s' (expected one of: %s)\n", sub.c_str(), subcommand_list().c_str());
    return kExitUsage;
  }
  if (positional.size() == 2) {
    if (!scenario_path.empty() && scenario_path != positional[1]) {
      std::fprintf(stderr, "scenario given twice\n");
      return kExitUsage;
    }
    scenario_path = positional[1];
  }
  if (scenario_path.empty()) {
    std::fprintf(stderr, "missing scenario (pass --scenario <path>)\n");
    return kExitUsage;
  }

  ahx_scenario* sc = nullptr;
  ahx_status st = ahx_scenario_load(scenario_path.c_str(), &sc);
  if (st != AHX_OK) {
    std::fprintf(stderr, "error: %s: %s\n", scenario_path.c_str(), ahx_last_error());
    return st == AHX_ERR_SCHEMA ? kExitSchema : kExitUsage;
  }
  char hash[64];
  ahx_scenario_hash(sc, hash, sizeof hash);
  std::fprintf(stderr, "scenario %s (config_hash=%s): running %s\n", scenario_path.c_str(), hash, sub.c_str());

  ahx_report* rep = nullptr;
  st = ahx_run(sc, sub.c_str(), out_dir.c_str(), threads, seed, seed_opt->count() > 0, &rep);
  int rc = 0;
  if (st == AHX_OK) {
    for (size_t i = 0; i < ahx_report_note_count(rep); ++i) std::printf("%s\n", ahx_report_note(rep, i));
    std::printf("wrote %zu file(s)\n", ahx_report_file_count(rep));
  } else if (st == AHX_ERR_SCHEMA) {
    std::fprintf(stderr, "error: %s\n", ahx_last_error());
    rc = kExitSchema;
  } else {
    const char* op = ahx_last_operation();
    std::fprintf(stderr, "error: numerical failure in %s [%s]: %s\n", *op ? op : sub.c_str(), ahx_status_name(st),
                 ahx_last_error());
    rc = kExitNumerical;
  }
  ahx_report_free(rep);
  ahx_scenario_free(sc);
  return rc;
}
