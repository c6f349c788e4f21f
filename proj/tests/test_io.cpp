#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <regex>

#include "homctl/io.hpp"
#include "homctl/plot.hpp"

using homctl::ConfigError;
using homctl::Json;
using homctl::Vector3d;
using std::numbers::pi;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "homctl_test_io";
  fs::create_directories(dir);
  return dir / name;
}

homctl::TrackingRecord mirrored_run(double T) {
  const auto gains = homctl::synthesize(homctl::PlantMatrices::double_integrator(3), -0.5, 10.0,
                                        {0.0029, 1.3208});
  homctl::BodyState s0;
  s0.R = homctl::exp_so3(Vector3d(pi / 2, 0, 0));
  s0.omega = Vector3d(30, 0, 0);
  return homctl::simulate_tracking(homctl::InertiaSpec::reference(), gains,
                                   homctl::TrajectorySpec::reference(), s0, std::nullopt, T,
                                   1e-4);
}

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

// y coordinates of the first polyline inside the n-th panel group.
std::vector<double> polyline_y(const std::string& svg, std::size_t panel) {
  std::size_t pos = 0;
  for (std::size_t p = 0; p <= panel; ++p) pos = svg.find("<g class=\"panel\"", pos + 1);
  pos = svg.find("points=\"", pos) + 8;
  const std::string pts = svg.substr(pos, svg.find('"', pos) - pos);
  std::vector<double> ys;
  std::regex pair(R"(([-0-9.]+),([-0-9.]+))");
  for (auto it = std::sregex_iterator(pts.begin(), pts.end(), pair); it != std::sregex_iterator();
       ++it) {
    ys.push_back(std::stod((*it)[2]));
  }
  return ys;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("number formatting round trips") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> expo(-300, 300), mant(-1, 1);
  for (int i = 0; i < 10000; ++i) {
    const double v = mant(rng) * std::pow(10.0, expo(rng));
    REQUIRE(std::strtod(homctl::format_double(v).c_str(), nullptr) == v);
  }
  CHECK(homctl::format_double(0.1) == "0.10000000000000001");
  CHECK(homctl::format_double(INFINITY) == "inf");
  CHECK(homctl::format_double(-INFINITY) == "-inf");
  CHECK(homctl::format_double(NAN) == "nan");
}

TEST_CASE("empty records give header-only files") {
  const fs::path p = scratch("empty_impulsive.csv");
  homctl::emit_csv(homctl::SimRecord{}, p, 2);
  CHECK(homctl::read_text(p) == "t,x_1,x_2,homnorm,event_flag\n");

  const fs::path q = scratch("empty_tracking.csv");
  homctl::emit_csv(homctl::TrackingRecord{}, q);
  CHECK(homctl::read_text(q) ==
        "t,theta_e_1,theta_e_2,theta_e_3,thetadot_e_1,thetadot_e_2,thetadot_e_3,"
        "omega_1,omega_2,omega_3,omega_d_1,omega_d_2,omega_d_3,M_1,M_2,M_3,homnorm,jump_flag\n");
  CHECK(homctl::parse_csv(homctl::read_text(q)).rows.empty());
}

TEST_CASE("tracking CSV reproduces the record exactly") {
  const double T = 0.1, dt = 1e-4;
  const auto rec = mirrored_run(T);
  REQUIRE(rec.events.size() == 1);
  CHECK(rec.size() == static_cast<std::size_t>(std::ceil(T / dt - 1e-9)) + 1 + 2);

  const fs::path p = scratch("tracking.csv");
  homctl::emit_csv(rec, p);
  const auto back = homctl::tracking_from_table(homctl::parse_csv(homctl::read_text(p)));
  REQUIRE(back.size() == rec.size());
  for (std::size_t k = 0; k < rec.size(); ++k) {
    REQUIRE(back.t[k] == rec.t[k]);
    REQUIRE(back.theta[k] == rec.theta[k]);
    REQUIRE(back.theta_dot[k] == rec.theta_dot[k]);
    REQUIRE(back.omega[k] == rec.omega[k]);
    REQUIRE(back.omega_d[k] == rec.omega_d[k]);
    REQUIRE(back.M[k] == rec.M[k]);
    REQUIRE(back.homnorm[k] == rec.homnorm[k]);
    REQUIRE(back.jump_flag[k] == rec.jump_flag[k]);
  }
  std::size_t flagged = 0;
  for (int f : back.jump_flag) flagged += f;
  CHECK(flagged == 1);
}

TEST_CASE("impulsive CSV reproduces the record exactly") {
  const auto plant = homctl::PlantMatrices::double_integrator(1);
  const auto gains = homctl::synthesize(plant, 0.0, 1.0);
  Eigen::VectorXd x0(2);
  x0 << 2.5, 4.0;
  const auto rec =
      homctl::simulate_impulsive(plant, gains, homctl::JumpSpec::block(1, pi), x0, 3.0, 1e-3);
  REQUIRE(rec.events.size() == 1);
  const auto back = homctl::impulsive_from_table(homctl::parse_csv(homctl::to_csv(homctl::to_table(rec))));
  REQUIRE(back.size() == rec.size());
  for (std::size_t k = 0; k < rec.size(); ++k) {
    REQUIRE(back.t[k] == rec.t[k]);
    REQUIRE(back.x[k] == rec.x[k]);
    REQUIRE(back.homnorm[k] == rec.homnorm[k]);
    REQUIRE(back.jump_flag[k] == rec.jump_flag[k]);
  }
  CHECK_THROWS_AS(homctl::parse_csv("t,x\n1,2,3\n"), std::invalid_argument);
  CHECK_THROWS_AS(homctl::parse_csv("t\nabc\n"), std::invalid_argument);
}

TEST_CASE("gain set JSON") {
  const auto gains = homctl::synthesize(homctl::PlantMatrices::double_integrator(3), -0.5, 10.0);
  const auto back = homctl::gains_from_json(Json::parse(homctl::gains_to_json(gains).dump()));
  CHECK(back.mu() == gains.mu());
  CHECK(back.rho() == gains.rho());
  CHECK(back.generator() == gains.generator());
  CHECK(back.weight() == gains.weight());
  CHECK(back.K() == gains.K());
  CHECK(back.K0() == gains.K0());
  CHECK(back.X() == gains.X());
  CHECK(back.Y() == gains.Y());
  CHECK(back.G0() == gains.G0());

  const auto printed = homctl::load_gains(fs::path(HOMCTL_SOURCE_DIR) / "data/paper_gains.json");
  const auto reference = homctl::reference_gains();
  CHECK(printed.K() == reference.K());
  CHECK((printed.X() - reference.X()).norm() < 1e-15);
  CHECK(printed.Y() == reference.Y());
  CHECK((printed.weight() - reference.weight()).norm() < 1e-12 * reference.weight().norm());
  CHECK(printed.K()(0, 0) == -459.6206);

  Json broken = homctl::gains_to_json(gains);
  broken.erase("K");
  CHECK(field_of([&] { homctl::gains_from_json(broken); }) == "K");
  broken = homctl::gains_to_json(gains);
  broken["X"]["data"].erase(0);
  CHECK(field_of([&] { homctl::gains_from_json(broken); }) == "X.data");
}

TEST_CASE("scenario JSON") {
  const auto s = homctl::load_scenario(fs::path(HOMCTL_SOURCE_DIR) / "configs/paper.json");
  CHECK(s.inertia.J.diagonal() == homctl::InertiaSpec::reference().J.diagonal());
  CHECK(s.trajectory.coefficients == homctl::TrajectorySpec::reference().coefficients);
  CHECK(s.rotation_vector == Vector3d(-pi / 2, 0, 0));
  CHECK(s.omega == Vector3d(30, 0, 0));
  CHECK(s.gains.mu == -0.5);
  CHECK(s.gains.rho == 10.0);
  CHECK(*s.gains.params.a == 0.0029);
  CHECK(*s.gains.params.c == 1.3208);
  CHECK_FALSE(s.noise.has_value());
  CHECK(s.horizon_s == 2.0);
  CHECK(s.dt_s == 1e-4);

  const auto again = homctl::scenario_from_json(homctl::scenario_to_json(s));
  CHECK(again.inertia.J == s.inertia.J);
  CHECK(again.rotation_vector == s.rotation_vector);
  CHECK(*again.gains.params.c == *s.gains.params.c);

  const auto file_gains =
      homctl::load_scenario(fs::path(HOMCTL_SOURCE_DIR) / "configs/paper-printed-gains.json");
  REQUIRE(file_gains.gains.file.has_value());
  CHECK(file_gains.build_gains().K() == homctl::reference_gains().K());

  Json j = homctl::scenario_to_json(s);
  j["dt_s"] = -1;
  CHECK(field_of([&] { homctl::scenario_from_json(j); }) == "dt_s");
  j = homctl::scenario_to_json(s);
  j["trajectory"].erase("coefficients_rad");
  CHECK(field_of([&] { homctl::scenario_from_json(j); }) == "trajectory.coefficients_rad");
  j = homctl::scenario_to_json(s);
  j["initial_state"]["omega_radps"] = {1, 2};
  CHECK(field_of([&] { homctl::scenario_from_json(j); }) == "initial_state.omega_radps");
  j = homctl::scenario_to_json(s);
  j["noise"] = {{"delta1_amplitude", -1.0}};
  CHECK(field_of([&] { homctl::scenario_from_json(j); }) == "noise.delta1_amplitude");
  j = homctl::scenario_to_json(s);
  j["inertia_kgm2"][0][1] = 5.0;
  CHECK(field_of([&] { homctl::scenario_from_json(j); }) == "inertia_kgm2");
  j = homctl::scenario_to_json(s);
  j["gains"] = {{"file", "does/not/exist.json"}};
  CHECK(field_of([&] { homctl::scenario_from_json(j); }) == "gains.file");
}

TEST_CASE("sha256") {
  CHECK(homctl::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(homctl::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const fs::path p = scratch("hash.txt");
  homctl::write_text(p, "abc");
  CHECK(homctl::sha256_file(p) == homctl::sha256_hex("abc"));
}

TEST_CASE("norm plot of a closed-loop run is monotone") {
  const auto rec = mirrored_run(1.2);
  REQUIRE(rec.events.size() == 1);
  const std::string svg = homctl::render_svg(homctl::plot_spec(rec, homctl::PlotChannel::homnorm));
  const auto ys = polyline_y(svg, 0);
  REQUIRE(ys.size() > 100);
  for (std::size_t k = 1; k < ys.size(); ++k) REQUIRE(ys[k] >= ys[k - 1]);  // SVG y grows down
  CHECK(count(svg, "class=\"jump-marker\"") == rec.events.size() * 2);

  for (auto ch : {homctl::PlotChannel::theta_e, homctl::PlotChannel::omega_tilde}) {
    const std::string s = homctl::render_svg(homctl::plot_spec(rec, ch));
    CHECK(count(s, "class=\"jump-marker\"") == rec.events.size() * 2);
    CHECK(count(s, "class=\"series\"") == 4);
  }
}

TEST_CASE("zero trajectory plots as a flat line") {
  homctl::TrackingRecord rec;
  for (int k = 0; k < 11; ++k) {
    rec.t.push_back(0.1 * k);
    rec.theta.push_back(Vector3d::Zero());
    rec.theta_dot.push_back(Vector3d::Zero());
    rec.omega.push_back(Vector3d::Zero());
    rec.omega_d.push_back(Vector3d::Zero());
    rec.M.push_back(Vector3d::Zero());
    rec.homnorm.push_back(0.0);
    rec.jump_flag.push_back(0);
  }
  const std::string svg = homctl::render_svg(homctl::plot_spec(rec, homctl::PlotChannel::homnorm));
  const auto ys = polyline_y(svg, 0);
  REQUIRE(ys.size() == 11);
  for (double y : ys) CHECK(y == ys.front());
  CHECK(count(svg, "class=\"jump-marker\"") == 0);
  CHECK_THROWS_AS(homctl::emit_plot(homctl::TrackingRecord{}, homctl::PlotChannel::homnorm,
                                    scratch("empty.svg")),
                  std::invalid_argument);
}

TEST_CASE("plot decimation keeps event rows") {
  const auto rec = mirrored_run(0.5);
  auto spec = homctl::plot_spec(rec, homctl::PlotChannel::homnorm);
  spec.max_points = 50;
  const auto ys = polyline_y(homctl::render_svg(spec), 0);
  CHECK(ys.size() < 60);
  CHECK(ys.size() >= 52);
}
