#pragma once

// Canned experiments: closed-loop runs, CSV/SVG artifacts and a JSON report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "homctl/io.hpp"

namespace homctl {

enum class ExperimentId { paper, mu_sweep, iss_noise, jump_demo, impulsive_generic };

const char* to_string(ExperimentId id);
/// Throws ConfigError naming "experiment" for an unknown id.
ExperimentId parse_experiment_id(const std::string& name);
std::vector<ExperimentId> all_experiments();

struct ExperimentConfig {
  ExperimentId id = ExperimentId::paper;
  std::optional<std::filesystem::path> scenario_path;
  std::optional<Json> scenario_inline;
  std::filesystem::path output_dir = "out";
  bool emit_plots = true;
  std::optional<double> dt_s;
  std::optional<double> horizon_s;
  std::optional<std::uint64_t> seed;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Built-in scenario of each experiment: the reference inertia, trajectory
/// and gains (mu = -0.5, rho = 10, a = 0.0029, c = 1.3208), omega0 = (30, 0, 0),
/// R0 = Exp(-pi/2 e1) for paper, mu-sweep and iss-noise, R0 = Exp(pi/2 e1) for
/// jump-demo; T = 2 s and dt = 1e-4 s, except impulsive-generic (T = 5 s,
/// dt = 1e-3 s). Noise seed 7.
Scenario default_scenario(ExperimentId id);

/// Config file or inline block over the defaults, then the dt/T/seed overrides.
Scenario resolve_scenario(const ExperimentConfig& config);

struct InvariantCheck {
  std::string name;
  bool passed = false;
  double value = 0;
  double limit = 0;
};

struct ManifestEntry {
  std::string file;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunSummary {
  std::string name;
  std::string csv;
  std::size_t rows = 0;
  std::size_t jumps = 0;
  double norm0 = 0;
  double settling_estimate_s = 0;  ///< infinite unless finite-time
  double measured_settling_s = 0;
  double final_norm = 0;
  double max_lyapunov_increase = 0;
  Json events = Json::array();
};

struct RunReport {
  ExperimentId id = ExperimentId::paper;
  Json scenario;
  Json gains;
  Json metrics = Json::object();
  std::vector<RunSummary> runs;
  std::vector<InvariantCheck> checks;
  std::vector<ManifestEntry> manifest;

  std::size_t jump_count() const;
  bool passed() const;
  const InvariantCheck* check(const std::string& name) const;
  const RunSummary* find_run(const std::string& name) const;
  Json to_json() const;
};

/// Runs the experiment, writes <name>.csv per run, optional SVG plots and
/// report.json into config.output_dir.
RunReport run(const ExperimentConfig& config);

}  // namespace homctl
