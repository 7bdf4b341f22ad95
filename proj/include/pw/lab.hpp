#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pw/dynamics.hpp"

namespace pw::lab {

/// Configuration error carrying the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct InitSpec {
  std::string kind = "gaussian";  // gaussian | box | bump (triangular)
  double center = 0.0;
  double sigma = 1.0;
  double momentum = 0.0;
  double lo = 0.0, hi = 1.0;
};

struct Scenario {
  std::string name = "scenario";
  std::string experiment = "trajectory";  // trajectory | theorem3 | invader | reverse_invader
  double x_min = -20.0, x_max = 20.0;
  int n = 4096;
  PhysicsParams phys;
  std::string potential_kind = "free";  // free | harmonic | sampled
  double omega = 1.0;
  std::string potential_file;
  InitSpec init;
  bool perturb_enabled = false;
  PerturbationSpec pert;
  double x0 = 0.0;
  std::optional<double> x0_quantile;
  double t1 = 1.0;
  int time_samples = 1000;
  std::vector<double> eps_list;
  std::string integrator = "guidance";  // guidance | cdf | both
  std::string mode = "standard";        // standard | concrete | graded
  int order_cap = 4;
  bool check_monotone_positions = false;
  bool check_expect_escape = false;
  std::string output_dir;
  unsigned long long seed = 42;
  std::string exec = "omp";  // omp | serial
};

/// Parses the flat dotted key-value format (see docs/config-schema.md).
/// Unknown keys and malformed values throw ConfigError.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path_or_preset);

struct CheckResult {
  std::string id;      // maps onto an acceptance criterion, e.g. "C6.equivariance"
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string details;
};

struct RunReport {
  std::string scenario_name;
  std::vector<CheckResult> checks;
  std::vector<std::string> artifacts;
  double wall_seconds = 0.0;
  bool all_pass() const;
};

/// Executes the scenario pipeline, writes CSV/JSON artifacts under the output
/// directory, and returns the per-check report.
RunReport run_scenario(const Scenario& sc);

/// Per-eps isolation: failures are recorded per row and remaining values
/// continue; emits the combined sweep table.
RunReport sweep_epsilon(const Scenario& sc);

std::vector<std::pair<std::string, std::string>> preset_list();  // name, summary
std::string preset_config(const std::string& name);

/// Re-emits the CSV artifacts of a stored run directory from artifacts.json.
std::vector<std::string> export_run(const std::string& run_dir);

// Scenario building blocks (shared with the acceptance suite).
Grid scenario_grid(const Scenario& sc);
Potential scenario_potential(const Scenario& sc, const Grid& g);
WaveFunction make_initial(const InitSpec& init, const Grid& g);
std::vector<double> make_times(double t1, int samples);

std::string render_report(const RunReport& report);

}  // namespace pw::lab
