#include "homctl/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

namespace homctl {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::invalid_argument("CSV: cannot parse number '" + s + "'");
  }
  return v;
}

void append3(std::vector<double>& row, const Vector3d& v) {
  row.insert(row.end(), v.data(), v.data() + 3);
}

void add_columns(std::vector<std::string>& header, const std::string& stem, int count) {
  for (int i = 1; i <= count; ++i) header.push_back(stem + "_" + std::to_string(i));
}

std::size_t column(const CsvTable& table, const std::string& name) {
  for (std::size_t k = 0; k < table.header.size(); ++k) {
    if (table.header[k] == name) return k;
  }
  throw std::invalid_argument("CSV: missing column '" + name + "'");
}

Vector3d read3(const std::vector<double>& row, std::size_t first) {
  return Vector3d(row[first], row[first + 1], row[first + 2]);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(join(path, key), "missing required field");
  }
  return j.at(key);
}

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  return j.get<double>();
}

Vector3d vector3(const Json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(field, "expected 3 numbers");
  Vector3d v;
  for (int i = 0; i < 3; ++i) v(i) = number(j[i], field + "[" + std::to_string(i) + "]");
  return v;
}

Json vec_json(const Vector3d& v) { return Json::array({v(0), v(1), v(2)}); }

}  // namespace

ConfigError::ConfigError(const std::string& field, const std::string& what)
    : std::runtime_error(field + ": " + what), field_(field) {}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t k = 0; k < table.header.size(); ++k) {
    if (k) out += ',';
    out += table.header[k];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::invalid_argument("to_csv: row width does not match the header");
    }
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      out += format_double(row[k]);
    }
    out += '\n';
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("CSV: missing header");
  table.header = split(line, ',');
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != table.header.size()) {
      throw std::invalid_argument("CSV: row " + std::to_string(table.rows.size() + 1) +
                                  " has the wrong number of cells");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

CsvTable to_table(const SimRecord& rec, int state_dim) {
  const int N = rec.x.empty() ? state_dim : static_cast<int>(rec.x.front().size());
  CsvTable table;
  table.header.push_back("t");
  add_columns(table.header, "x", N);
  table.header.push_back("homnorm");
  table.header.push_back("event_flag");
  table.rows.reserve(rec.size());
  for (std::size_t k = 0; k < rec.size(); ++k) {
    std::vector<double> row;
    row.reserve(N + 3);
    row.push_back(rec.t[k]);
    row.insert(row.end(), rec.x[k].data(), rec.x[k].data() + rec.x[k].size());
    row.push_back(rec.homnorm[k]);
    row.push_back(rec.jump_flag[k]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable to_table(const TrackingRecord& rec) {
  CsvTable table;
  table.header.push_back("t");
  add_columns(table.header, "theta_e", 3);
  add_columns(table.header, "thetadot_e", 3);
  add_columns(table.header, "omega", 3);
  add_columns(table.header, "omega_d", 3);
  add_columns(table.header, "M", 3);
  table.header.push_back("homnorm");
  table.header.push_back("jump_flag");
  table.rows.reserve(rec.size());
  for (std::size_t k = 0; k < rec.size(); ++k) {
    std::vector<double> row;
    row.reserve(18);
    row.push_back(rec.t[k]);
    append3(row, rec.theta[k]);
    append3(row, rec.theta_dot[k]);
    append3(row, rec.omega[k]);
    append3(row, rec.omega_d[k]);
    append3(row, rec.M[k]);
    row.push_back(rec.homnorm[k]);
    row.push_back(rec.jump_flag[k]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

SimRecord impulsive_from_table(const CsvTable& table) {
  const std::size_t t_col = column(table, "t");
  const std::size_t norm_col = column(table, "homnorm");
  const std::size_t flag_col = column(table, "event_flag");
  const std::size_t N = norm_col - t_col - 1;
  SimRecord rec;
  for (const auto& row : table.rows) {
    rec.t.push_back(row[t_col]);
    VectorXd x(N);
    for (std::size_t i = 0; i < N; ++i) x(i) = row[t_col + 1 + i];
    rec.x.push_back(std::move(x));
    rec.homnorm.push_back(row[norm_col]);
    rec.jump_flag.push_back(static_cast<int>(row[flag_col]));
  }
  return rec;
}

TrackingRecord tracking_from_table(const CsvTable& table) {
  const std::size_t t_col = column(table, "t");
  const std::size_t theta_col = column(table, "theta_e_1");
  const std::size_t rate_col = column(table, "thetadot_e_1");
  const std::size_t omega_col = column(table, "omega_1");
  const std::size_t omega_d_col = column(table, "omega_d_1");
  const std::size_t m_col = column(table, "M_1");
  const std::size_t norm_col = column(table, "homnorm");
  const std::size_t flag_col = column(table, "jump_flag");
  TrackingRecord rec;
  for (const auto& row : table.rows) {
    rec.t.push_back(row[t_col]);
    rec.theta.push_back(read3(row, theta_col));
    rec.theta_dot.push_back(read3(row, rate_col));
    rec.omega.push_back(read3(row, omega_col));
    rec.omega_d.push_back(read3(row, omega_d_col));
    rec.M.push_back(read3(row, m_col));
    rec.homnorm.push_back(row[norm_col]);
    rec.jump_flag.push_back(static_cast<int>(row[flag_col]));
  }
  return rec;
}

void emit_csv(const SimRecord& rec, const std::filesystem::path& path, int state_dim) {
  write_text(path, to_csv(to_table(rec, state_dim)));
}

void emit_csv(const TrackingRecord& rec, const std::filesystem::path& path) {
  write_text(path, to_csv(to_table(rec)));
}

Json matrix_to_json(const MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

MatrixXd matrix_from_json(const Json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field, "expected {rows, cols, data}");
  const Json& rows_j = require(j, "rows", field);
  const Json& cols_j = require(j, "cols", field);
  const Json& data = require(j, "data", field);
  if (!rows_j.is_number_integer() || !cols_j.is_number_integer()) {
    throw ConfigError(field, "rows and cols must be integers");
  }
  const long rows = rows_j.get<long>();
  const long cols = cols_j.get<long>();
  if (rows < 0 || cols < 0 || !data.is_array() ||
      data.size() != static_cast<std::size_t>(rows * cols)) {
    throw ConfigError(join(field, "data"), "expected rows * cols numbers");
  }
  MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long k = 0; k < cols; ++k) {
      m(i, k) = number(data[i * cols + k], join(field, "data"));
    }
  }
  return m;
}

Json gains_to_json(const GainSet& gains) {
  Json j;
  j["n"] = gains.input_dim();
  j["mu"] = gains.mu();
  j["rho"] = gains.rho();
  j["G_d"] = matrix_to_json(gains.generator());
  j["P"] = matrix_to_json(gains.weight());
  j["K0"] = matrix_to_json(gains.K0());
  j["K"] = matrix_to_json(gains.K());
  j["X"] = matrix_to_json(gains.X());
  j["Y"] = matrix_to_json(gains.Y());
  if (gains.G0().size()) j["G0"] = matrix_to_json(gains.G0());
  if (gains.Y0().size()) j["Y0"] = matrix_to_json(gains.Y0());
  return j;
}

GainSet gains_from_json(const Json& j) {
  const double mu = number(require(j, "mu", ""), "mu");
  const double rho = number(require(j, "rho", ""), "rho");
  MatrixXd G = matrix_from_json(require(j, "G_d", ""), "G_d");
  MatrixXd X = matrix_from_json(require(j, "X", ""), "X");
  MatrixXd P;
  if (j.contains("P")) {
    P = matrix_from_json(j.at("P"), "P");
  } else {
    P = X.inverse();
    P = ((P + P.transpose()) / 2).eval();
  }
  MatrixXd K0 = matrix_from_json(require(j, "K0", ""), "K0");
  MatrixXd K = matrix_from_json(require(j, "K", ""), "K");
  MatrixXd Y = matrix_from_json(require(j, "Y", ""), "Y");
  MatrixXd G0 = j.contains("G0") ? matrix_from_json(j.at("G0"), "G0") : MatrixXd();
  MatrixXd Y0 = j.contains("Y0") ? matrix_from_json(j.at("Y0"), "Y0") : MatrixXd();
  try {
    return GainSet(mu, rho, std::move(G), std::move(P), std::move(K0), std::move(K),
                   std::move(X), std::move(Y), std::move(G0), std::move(Y0));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("gains", e.what());
  }
}

GainSet load_gains(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
  return gains_from_json(j);
}

BodyState Scenario::initial_state() const {
  BodyState s;
  s.R = exp_so3(rotation_vector);
  s.omega = omega;
  return s;
}

GainSet Scenario::build_gains() const {
  if (gains.file) return load_gains(*gains.file);
  return synthesize(PlantMatrices::double_integrator(3), gains.mu, gains.rho, gains.params);
}

Scenario scenario_from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("scenario", "expected a JSON object");
  Scenario s;

  const bool full = j.contains("inertia_kgm2");
  const bool diag = j.contains("inertia_diag_kgm2");
  if (full && diag) {
    throw ConfigError("inertia_kgm2", "give either inertia_kgm2 or inertia_diag_kgm2");
  }
  if (full) {
    const Json& rows = j.at("inertia_kgm2");
    if (!rows.is_array() || rows.size() != 3) {
      throw ConfigError("inertia_kgm2", "expected 3 rows of 3 numbers");
    }
    for (int i = 0; i < 3; ++i) {
      s.inertia.J.row(i) =
          vector3(rows[i], "inertia_kgm2[" + std::to_string(i) + "]").transpose();
    }
  } else if (diag) {
    s.inertia = InertiaSpec::diagonal(vector3(j.at("inertia_diag_kgm2"), "inertia_diag_kgm2"));
  }
  try {
    s.inertia.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(full ? "inertia_kgm2" : "inertia_diag_kgm2", e.what());
  }

  if (j.contains("gains")) {
    const Json& g = j.at("gains");
    if (!g.is_object()) throw ConfigError("gains", "expected an object");
    if (g.contains("file")) {
      if (!g.at("file").is_string()) throw ConfigError("gains.file", "expected a path");
      std::filesystem::path p = g.at("file").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      if (!std::filesystem::exists(p)) {
        throw ConfigError("gains.file", "file not found: " + p.string());
      }
      s.gains.file = p;
    }
    if (g.contains("mu")) s.gains.mu = number(g.at("mu"), "gains.mu");
    if (g.contains("rho_per_s")) s.gains.rho = number(g.at("rho_per_s"), "gains.rho_per_s");
    if (g.contains("a")) s.gains.params.a = number(g.at("a"), "gains.a");
    if (g.contains("c")) s.gains.params.c = number(g.at("c"), "gains.c");
    if (!(s.gains.mu > -1 && s.gains.mu <= 0.5)) {
      throw ConfigError("gains.mu", "must lie in (-1, 0.5]");
    }
    if (!(s.gains.rho > 0)) throw ConfigError("gains.rho_per_s", "must be positive");
  }

  if (j.contains("trajectory")) {
    const Json& coeff = require(j.at("trajectory"), "coefficients_rad", "trajectory");
    const std::string field = "trajectory.coefficients_rad";
    if (!coeff.is_array() || coeff.size() != 3) {
      throw ConfigError(field, "expected 3 rows (one per axis)");
    }
    s.trajectory.coefficients.setZero();
    for (int i = 0; i < 3; ++i) {
      const std::string row_field = field + "[" + std::to_string(i) + "]";
      if (!coeff[i].is_array() || coeff[i].size() > 5) {
        throw ConfigError(row_field, "expected at most 5 coefficients");
      }
      for (std::size_t k = 0; k < coeff[i].size(); ++k) {
        s.trajectory.coefficients(i, k) = number(coeff[i][k], row_field);
      }
    }
  }

  if (j.contains("initial_state")) {
    const Json& init = j.at("initial_state");
    if (init.contains("rotation_vector_rad")) {
      s.rotation_vector =
          vector3(init.at("rotation_vector_rad"), "initial_state.rotation_vector_rad");
    }
    if (init.contains("omega_radps")) {
      s.omega = vector3(init.at("omega_radps"), "initial_state.omega_radps");
    }
  }

  if (j.contains("noise") && !j.at("noise").is_null()) {
    const Json& nz = j.at("noise");
    NoiseSpec noise;
    if (nz.contains("delta1_amplitude")) {
      noise.delta1_amplitude = number(nz.at("delta1_amplitude"), "noise.delta1_amplitude");
    }
    if (nz.contains("delta2_amplitude_radps2")) {
      noise.delta2_amplitude =
          number(nz.at("delta2_amplitude_radps2"), "noise.delta2_amplitude_radps2");
    }
    if (nz.contains("seed")) {
      if (!nz.at("seed").is_number_unsigned()) {
        throw ConfigError("noise.seed", "expected a non-negative integer");
      }
      noise.seed = nz.at("seed").get<std::uint64_t>();
    }
    if (nz.contains("cutoff_s")) noise.cutoff_s = number(nz.at("cutoff_s"), "noise.cutoff_s");
    if (!(noise.delta1_amplitude >= 0)) {
      throw ConfigError("noise.delta1_amplitude", "must be non-negative");
    }
    if (!(noise.delta2_amplitude >= 0)) {
      throw ConfigError("noise.delta2_amplitude_radps2", "must be non-negative");
    }
    s.noise = noise;
  }

  if (j.contains("horizon_s")) s.horizon_s = number(j.at("horizon_s"), "horizon_s");
  if (j.contains("dt_s")) s.dt_s = number(j.at("dt_s"), "dt_s");
  if (!(s.horizon_s > 0)) throw ConfigError("horizon_s", "must be positive");
  if (!(s.dt_s > 0)) throw ConfigError("dt_s", "must be positive");
  if (s.dt_s > s.horizon_s) throw ConfigError("dt_s", "exceeds horizon_s");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config", "file not found: " + path.string());
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", e.what());
  }
  return scenario_from_json(j, path.parent_path());
}

Json scenario_to_json(const Scenario& s) {
  Json j;
  Json rows = Json::array();
  for (int i = 0; i < 3; ++i) rows.push_back(vec_json(s.inertia.J.row(i).transpose()));
  j["inertia_kgm2"] = rows;
  Json g;
  if (s.gains.file) {
    g["file"] = s.gains.file->string();
  } else {
    g["mu"] = s.gains.mu;
    g["rho_per_s"] = s.gains.rho;
    if (s.gains.params.a) g["a"] = *s.gains.params.a;
    if (s.gains.params.c) g["c"] = *s.gains.params.c;
  }
  j["gains"] = g;
  Json coeff = Json::array();
  for (int i = 0; i < 3; ++i) {
    Json row = Json::array();
    for (int k = 0; k < 5; ++k) row.push_back(s.trajectory.coefficients(i, k));
    coeff.push_back(row);
  }
  j["trajectory"] = {{"coefficients_rad", coeff}};
  j["initial_state"] = {{"rotation_vector_rad", vec_json(s.rotation_vector)},
                        {"omega_radps", vec_json(s.omega)}};
  if (s.noise) {
    Json nz{{"delta1_amplitude", s.noise->delta1_amplitude},
            {"delta2_amplitude_radps2", s.noise->delta2_amplitude},
            {"seed", s.noise->seed}};
    if (std::isfinite(s.noise->cutoff_s)) nz["cutoff_s"] = s.noise->cutoff_s;
    j["noise"] = nz;
  } else {
    j["noise"] = nullptr;
  }
  j["horizon_s"] = s.horizon_s;
  j["dt_s"] = s.dt_s;
  return j;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_text(path));
}

}  // namespace homctl
