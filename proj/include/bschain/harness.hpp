#pragma once

// Experiment specifications, runners for E1-E11, and report serialisation.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bschain/continuum.hpp"

namespace bschain {

/// a0 + sum_k cos[k] cos(2 pi k u) + sum_k sin[k-1] sin(2 pi k u)
struct TrigProfile {
  std::vector<double> cos;
  std::vector<double> sin;

  SpectralProfile spectral(int modes = 0) const;
  double operator()(double u) const;
};

struct ExperimentSpec {
  std::string id;
  std::vector<int> n_list;
  double alpha = 0.5;
  std::vector<double> kappa_list{1.0};
  double beta = 1.0;
  double rho = 0.0;
  std::optional<TrigProfile> v0;
  std::optional<TrigProfile> e0;
  std::optional<TrigProfile> test_function;
  double horizon = 0.0;
  /// Absolute observation times; empty means {horizon}.
  std::vector<double> schedule;
  std::uint64_t replicas = 0;
  std::uint64_t seed = 1;
  std::string output;
  /// Ceiling on projected chain events, T N^3 R summed over runs.
  double budget = 1e10;
  std::map<std::string, double> tolerances;

  double tolerance(const std::string& key, double fallback) const;
};

/// Parses YAML text; schema errors throw UsageError naming the field path.
ExperimentSpec parse_spec(const std::string& yaml_text);
ExperimentSpec load_spec(const std::string& path);
/// Semantic checks (known id, parameter ranges, alpha_N < 1, positive compressibility, budget).
void validate_spec(const ExperimentSpec& spec);
/// Built-in configuration matching configs/<id>.yaml.
ExperimentSpec default_spec(const std::string& id);
std::string spec_to_yaml(const ExperimentSpec& spec);

/// Projected number of chain events for the Monte Carlo parts of the experiment.
double projected_events(const ExperimentSpec& spec);

struct ExperimentInfo {
  std::string id;
  std::string title;
};
std::vector<ExperimentInfo> list_experiments();

struct Check {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  std::string comparator;  // "<=", ">=", "<"
  bool passed = false;
};

struct RunOptions {
  std::string out_dir;  // empty: spec.output, then $BSCHAIN_OUT, then "out/<id>"
  int workers = 1;
  bool write_files = true;
};

struct RunReport {
  std::string experiment;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  /// Named result values echoed into summary.json.
  std::map<std::string, double> values;
  /// CSV file name -> contents.
  std::map<std::string, std::string> tables;
  double wall_seconds = 0.0;
  std::string out_dir;

  bool passed() const;
  std::string summary_json() const;
};

/// Validates, checks the budget, executes, and (optionally) writes manifest.json,
/// summary.json and the CSV tables.
RunReport run(const ExperimentSpec& spec, const RunOptions& opts = {});

std::string version_string();

}  // namespace bschain
