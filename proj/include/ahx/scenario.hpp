#pragma once

// Scenario files (JSON) and the experiment runner behind the CLI subcommands.

#include "ahx/normalop.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ahx {

struct Scenario {
  std::string name;
  FamilySpec family;
  double eps0 = 1.0;

  // operator constants
  double sigma = 1.0;
  std::vector<double> etas{0.02, 0.01, 0.005, 0.0025};  // sorted descending
  double M = 1.0;
  double q = 0.25;
  LocalityConstants loc;
  SphereGrid sphere{32, 64};
  KernelQuadrature kq{12, 16, 4, 48, 0.5, 40.0};

  // background grid for kernels and Schur sweeps
  int grid_nx = 20, grid_ny = 20;
  double grid_x_lo = 0.0025, grid_x_hi = 0.05, grid_y_extent = 0.3;

  // assembly for assemble/invert: lens-fitted box at the smallest η
  int assembly_nodes = 30;
  AssemblyMethod assembly_method = AssemblyMethod::kSphere;

  // Schur sampling
  SchurOptions schur;

  int geodesic_count = 100;
  int xray_count = 50;
  int convexity_points = 10, convexity_dirs = 10;

  std::string output_dir = "out";
  std::uint64_t seed = 1;

  int n() const { return family.n; }
  /// FNV-1a of the canonical JSON form (output directory excluded).
  std::string hash() const;
  std::string to_json() const;
  /// Operator configuration at one η on the background grid.
  NormalOperatorConfig operator_config(double eta) const;
  /// Operator configuration on the lens-fitted assembly grid at the smallest η.
  NormalOperatorConfig assembly_config() const;
};

/// Parses a scenario; schema violations throw Error(kSchema) with a JSON-pointer prefix.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

struct RunOptions {
  std::string out_dir;  // empty: scenario's output_dir
  int threads = 1;
  std::uint64_t seed = 0;  // 0: scenario's seed
  bool seed_set = false;
};

/// Failure of a numerical step; `operation` names it.
class RunError : public Error {
 public:
  RunError(std::string operation, ErrorCode code, const std::string& what)
      : Error(code, operation + ": " + what), operation_(std::move(operation)) {}
  const std::string& operation() const { return operation_; }

 private:
  std::string operation_;
};

struct RunReport {
  std::vector<std::string> files;
  std::vector<std::string> notes;
};

/// Subcommands: geodesics, xray, kernel, blowup, schur-sweep, assemble, invert, convexity, all.
RunReport run_subcommand(const Scenario& sc, const std::string& subcommand, const RunOptions& opts = {});

const std::vector<std::string>& subcommand_names();

}  // namespace ahx
