#pragma once

// CSV records, JSON gain sets and scenarios, content hashes.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "homctl/attitude.hpp"
#include "homctl/impulsive.hpp"
#include "homctl/synthesis.hpp"

namespace homctl {

using Json = nlohmann::ordered_json;

/// Raised for malformed configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// 17 significant digits, round-trip exact; "inf", "-inf" and "nan" as such.
std::string format_double(double v);

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Columns t, x_1..x_N, homnorm, event_flag. state_dim is only consulted for
/// an empty record.
CsvTable to_table(const SimRecord& rec, int state_dim = 0);
/// Columns t, theta_e_{1..3}, thetadot_e_{1..3}, omega_{1..3}, omega_d_{1..3},
/// M_{1..3}, homnorm, jump_flag.
CsvTable to_table(const TrackingRecord& rec);

SimRecord impulsive_from_table(const CsvTable& table);
TrackingRecord tracking_from_table(const CsvTable& table);

void emit_csv(const SimRecord& rec, const std::filesystem::path& path, int state_dim = 0);
void emit_csv(const TrackingRecord& rec, const std::filesystem::path& path);

/// Matrices are stored as {"rows", "cols", "data"} with row-major data.
Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j, const std::string& field);

Json gains_to_json(const GainSet& gains);
/// Requires mu, rho, G_d, K0, K, X, Y. P defaults to X^{-1}; G0 and Y0 are optional.
GainSet gains_from_json(const Json& j);
GainSet load_gains(const std::filesystem::path& path);

struct GainSource {
  double mu = -0.5;
  double rho = 10.0;
  DesignParameters params;
  std::optional<std::filesystem::path> file;  ///< gain-set JSON, overrides synthesis
};

struct Scenario {
  InertiaSpec inertia = InertiaSpec::reference();
  GainSource gains;
  TrajectorySpec trajectory = TrajectorySpec::reference();
  Vector3d rotation_vector = Vector3d::Zero();  ///< R0 = Exp(rotation_vector)
  Vector3d omega = Vector3d::Zero();
  std::optional<NoiseSpec> noise;
  double horizon_s = 2.0;
  double dt_s = 1e-4;

  BodyState initial_state() const;
  GainSet build_gains() const;
};

/// Keys: inertia_kgm2 (3x3 rows) or inertia_diag_kgm2; gains {mu, rho_per_s,
/// a, c} or {file}; trajectory.coefficients_rad (3 rows of up to 5);
/// initial_state {rotation_vector_rad, omega_radps}; noise {delta1_amplitude,
/// delta2_amplitude_radps2, seed, cutoff_s}; horizon_s; dt_s. Relative gain
/// file paths resolve against base_dir.
Scenario scenario_from_json(const Json& j, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);
Json scenario_to_json(const Scenario& s);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace homctl
