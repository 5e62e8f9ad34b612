#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "grusin/grid.hpp"
#include "grusin/params.hpp"

namespace grusin {

/// Grid block: one entry per axis, or a single entry broadcast to every axis.
/// `min_width` > 0 selects a geometrically graded axis.
struct GridSpec {
  std::vector<double> half_width{4.0};
  std::vector<int> cells{64};
  std::vector<double> min_width;
  Grid build(int n, int m) const;
};

struct SolverSpec {
  int steps = 40;
  int smoothing = 2;
  double tolerance = 1e-8;
};

/// Experiment options are named lists of numbers; scalars are one-element lists.
using OptionMap = std::map<std::string, std::vector<double>>;

struct ExperimentConfig {
  std::string experiment;
  GrusinParams params;
  Representative representative = Representative::smooth;
  GridSpec grid;
  SolverSpec solver;
  std::vector<double> times;
  OptionMap options;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  double option(const std::string& key) const;
  const std::vector<double>& option_list(const std::string& key) const;
  /// Throws std::invalid_argument on unknown experiment or option names and invalid values.
  void validate() const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Parses YAML text. Unknown keys anywhere are rejected.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::string& path);
/// Default config of a named experiment, tolerances included.
ExperimentConfig default_config(const std::string& experiment);
std::vector<std::string> experiment_names();
/// Subcommand that owns the experiment (geometry, heat, wave, ineq, sep).
std::string experiment_group(const std::string& experiment);

/// Sets a dotted key (params.d1, grid.N, grid.L, solver.steps, options.<name>, seed) from a number.
void set_config_value(ExperimentConfig& cfg, const std::string& key, double value);

struct Check {
  std::string name;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool pass() const { return value >= lo && value <= hi; }
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
};

struct VerificationReport {
  std::string id;
  std::string experiment;
  nlohmann::json config;
  std::map<std::string, double> measured;
  std::vector<Check> checks;
  std::vector<Table> tables;
  std::vector<std::string> notes;
  std::string error;  ///< non-empty when the run threw
  bool passed = false;
  double wall_seconds = 0.0;

  /// All checks pass and no error.
  bool recompute_pass() const;
  nlohmann::json to_json() const;
  /// Same as to_json without wall_seconds; identical for identical (config, seed).
  nlohmann::json body() const;
  static VerificationReport from_json(const nlohmann::json& j);
};

/// SplitMix64 step; used to derive independent sub-task seeds from one root.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

/// Runs one experiment. Exceptions from the numerics propagate.
VerificationReport run(const ExperimentConfig& cfg);
/// Runs and writes <output_dir>/<id>.json and one CSV per table. Files are written to a
/// temporary name and renamed, so no partial report ever appears under the final name.
VerificationReport run_and_write(const ExperimentConfig& cfg);

void write_json_atomic(const std::string& path, const nlohmann::json& j);
void write_csv_atomic(const std::string& path, const Table& t);
VerificationReport load_report(const std::string& path);

struct SweepAxis {
  std::string key;
  std::vector<double> values;
};

struct SweepResult {
  std::vector<VerificationReport> reports;
  Table summary;
  bool all_passed() const;
};

/// One independent run per axis value, up to `workers` at a time. Entry i gets seed
/// derive_seed(template seed, i). A run that throws is reported as failed; the sweep continues.
/// Sweeping grid.N adds relative-change columns between consecutive rows.
SweepResult sweep(const ExperimentConfig& base, const SweepAxis& axis, int workers = 1, bool write = false);

/// Summary table over reports (one row each).
Table summarize(const std::vector<VerificationReport>& reports, const std::string& axis_key = "",
                const std::vector<double>& axis_values = {});

}  // namespace grusin
