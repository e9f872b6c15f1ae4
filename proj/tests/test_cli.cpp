#include "ahx/ahx.h"
#include "ahx/scenario.hpp"

#include "helpers.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace ahx;
namespace fs = std::filesystem;

namespace {

const std::string kQuick = std::string(AHX_SOURCE_DIR) + "/scenarios/quick_even.json";

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string body_of(const std::string& csv) { return csv.substr(csv.find('\n') + 1); }

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ahx_test_" + name);
  fs::remove_all(p);
  return p.string();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AHX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string error_of(const std::string& json) {
  try {
    parse_scenario(json);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSchema);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("scenario parsing") {
  const Scenario sc = load_scenario(kQuick);
  CHECK(sc.name == "quick_even");
  CHECK(sc.n() == 2);
  CHECK(sc.etas.size() == 2);
  CHECK(sc.seed == 7);
  SUBCASE("hash is stable and ignores the output directory") {
    CHECK(sc.hash() == load_scenario(kQuick).hash());
    Scenario other = sc;
    other.output_dir = "elsewhere";
    CHECK(other.hash() == sc.hash());
    other.sigma = 2.0;
    CHECK(other.hash() != sc.hash());
    CHECK(parse_scenario(sc.to_json()).hash() == sc.hash());
  }
  SUBCASE("errors carry a JSON pointer") {
    CHECK(error_of("{\"name\": \"a\", \"family\": {\"nme\": \"hyperbolic\"}}").find("/family/nme") !=
          std::string::npos);
    CHECK(error_of("{\"name\": \"a\", \"family\": {\"name\": \"hyperbolic\", \"n\": 2},"
                   " \"operator\": {\"eta\": [0.01, 0.02]}}")
              .find("/operator/eta/1") != std::string::npos);
    CHECK(error_of("{\"name\": \"a\", \"family\": {\"name\": \"nope\", \"n\": 2}}").find("/family/name") !=
          std::string::npos);
    CHECK(error_of("not json").find("invalid JSON") != std::string::npos);
    CHECK(error_of("{\"name\": \"a\", \"family\": {\"name\": \"hyperbolic\", \"n\": 2}, \"seed\": -1}")
              .find("/seed") != std::string::npos);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_scenario("/nonexistent/x.json"), Error); }
}

TEST_CASE("reruns are byte-identical below the header") {
  const Scenario sc = load_scenario(kQuick);
  for (const char* sub : {"convexity", "geodesics"}) {
    RunOptions o1, o2;
    o1.out_dir = scratch(std::string(sub) + "_1");
    o2.out_dir = scratch(std::string(sub) + "_2");
    const RunReport r1 = run_subcommand(sc, sub, o1);
    run_subcommand(sc, sub, o2);
    REQUIRE(!r1.files.empty());
    for (const auto& f : r1.files) {
      const fs::path rel = fs::relative(f, o1.out_dir);
      const std::string a = read_file(f), b = read_file(fs::path(o2.out_dir) / rel);
      CHECK(a.rfind("# config_hash=" + sc.hash(), 0) == 0);
      CHECK(body_of(a) == body_of(b));
    }
  }
}

TEST_CASE("C API") {
  ahx_scenario* sc = nullptr;
  REQUIRE(ahx_scenario_load(kQuick.c_str(), &sc) == AHX_OK);
  char buf[64];
  REQUIRE(ahx_scenario_hash(sc, buf, sizeof buf) == AHX_OK);
  CHECK(std::string(buf) == load_scenario(kQuick).hash());
  CHECK(ahx_scenario_hash(sc, buf, 2) == AHX_ERR_INVALID_ARGUMENT);
  REQUIRE(ahx_scenario_name(sc, buf, sizeof buf) == AHX_OK);
  CHECK(std::string(buf) == "quick_even");

  ahx_scenario* bad = nullptr;
  CHECK(ahx_scenario_parse("{\"name\": 3}", &bad) == AHX_ERR_SCHEMA);
  CHECK(bad == nullptr);
  CHECK(std::string(ahx_last_error()).find("/name") != std::string::npos);

  bool has_all = false;
  for (size_t i = 0; i < ahx_subcommand_count(); ++i) has_all |= std::string(ahx_subcommand_name(i)) == "all";
  CHECK(has_all);

  ahx_model* m = nullptr;
  REQUIRE(ahx_model_from_scenario(sc, 0.01, &m) == AHX_OK);
  CHECK(ahx_model_dim(m) == 3);
  const double z[3] = {0.02, 0.05, -0.02}, v[3] = {0.01, 0.03, 0.02};
  double zt[3], w[3];
  REQUIRE(ahx_exp_map(m, z, v, zt) == AHX_OK);
  REQUIRE(ahx_inverse_exp(m, z, zt, w) == AHX_OK);
  for (int i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(v[i]).epsilon(1e-8));
  double k = -1.0;
  CHECK(ahx_kernel(m, z, zt, &k) == AHX_OK);
  CHECK(k >= 0.0);
  const double theta[3] = {0.0, 1.0, 0.0};
  double lim = 0.0;
  REQUIRE(ahx_diagonal_limit(m, 0.01, theta, &lim) == AHX_OK);
  CHECK(lim == doctest::Approx(0.5));
  CHECK(ahx_exp_map(m, nullptr, v, zt) == AHX_ERR_INVALID_ARGUMENT);
  ahx_model_free(m);

  ahx_report* rep = nullptr;
  CHECK(ahx_run(sc, "bogus", scratch("bogus").c_str(), 1, 0, 0, &rep) != AHX_OK);
  REQUIRE(ahx_run(sc, "convexity", scratch("capi").c_str(), 1, 0, 0, &rep) == AHX_OK);
  CHECK(ahx_report_file_count(rep) >= 1);
  ahx_report_free(rep);
  ahx_scenario_free(sc);
}

TEST_CASE("command-line exit codes") {
  const std::string out = scratch("cli");
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("run convexity " + kQuick + " --out " + out) == 0);
  CHECK(fs::exists(fs::path(out) / "convexity.csv"));
  CHECK(run_cli("run frobnicate " + kQuick) == 1);
  CHECK(run_cli("--no-such-flag") == 1);
  const std::string bad = scratch("bad.json");
  std::ofstream(bad) << "{\"name\": \"x\", \"family\": {\"nme\": 1}}";
  CHECK(run_cli("run convexity " + bad) == 2);
  CHECK(run_cli("run convexity /nonexistent.json") == 2);
  const std::string n3 = std::string(AHX_SOURCE_DIR) + "/scenarios/n3_bump.json";
  CHECK(run_cli("run schur-sweep " + n3 + " --out " + scratch("n3")) == 3);
}
