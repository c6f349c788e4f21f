// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "homctl/experiments.hpp"

using namespace homctl;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAILED]");
  }
};

std::string fmt(const char* format, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string fmt2(const char* format, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b);
  return buf;
}

struct ExperimentRuns {
  RunReport first;
  RunReport second;
  double first_seconds = 0;
};

std::map<ExperimentId, ExperimentRuns> run_all(const fs::path& root) {
  std::map<ExperimentId, ExperimentRuns> out;
  for (ExperimentId id : all_experiments()) {
    ExperimentConfig config;
    config.id = id;
    config.output_dir = root / "a" / to_string(id);
    fs::remove_all(config.output_dir);
    const auto t0 = std::chrono::steady_clock::now();
    RunReport first = run(config);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    config.output_dir = root / "b" / to_string(id);
    fs::remove_all(config.output_dir);
    out[id] = {std::move(first), run(config), seconds};
  }
  return out;
}

bool check_passed(const RunReport& report, const std::string& name) {
  const InvariantCheck* c = report.check(name);
  return c && c->passed;
}

double check_value(const RunReport& report, const std::string& name) {
  const InvariantCheck* c = report.check(name);
  return c ? c->value : NAN;
}

Outcome paper_reproduction(const ExperimentRuns& runs) {
  Outcome o;
  const RunReport& r = runs.first;
  const RunSummary& s = r.runs.front();
  const double estimate = std::sqrt(s.norm0) / 5;
  const double rel = std::abs(estimate - 1.1157) / 1.1157;
  const double sup_after = r.metrics["sup_norm_after_estimate"].get<double>();
  o.require(s.jumps == 1, fmt("jump count %.0f (expected exactly 1)", s.jumps));
  o.require(rel <= 0.05, fmt2("estimate %.4f s, %.2f%% from 1.1157 s", estimate, 100 * rel));
  o.require(sup_after <= 1e-3, fmt("sup ||xi||_d after estimate %.3g <= 1e-3", sup_after));
  o.require(runs.first_seconds < 60, fmt("runtime %.2f s < 60 s", runs.first_seconds));
  return o;
}

Outcome gain_validation() {
  Outcome o;
  const PlantMatrices plant = PlantMatrices::double_integrator(3);
  struct Case {
    double mu, rho;
    DesignParameters params;
  };
  const std::vector<Case> cases{{-0.5, 10.0, {0.0029, 1.3208}},
                                {-0.5, 10.0, {}},
                                {-0.9, 1.0, {}},
                                {0.0, 10.0, {}},
                                {0.5, 2.0, {}}};
  double worst = 0;
  bool all_ok = true;
  for (const auto& c : cases) {
    const DesignReport dr = validate_design(synthesize(plant, c.mu, c.rho, c.params), plant);
    worst = std::max({worst, dr.g0_equation_residual, dr.g0_constraint_residual,
                      dr.commutation_residual, dr.algebraic_residual});
    all_ok = all_ok && dr.ok(1e-10);
  }
  o.require(all_ok, fmt("closed-form residuals max %.2e < 1e-10", worst));

  const GainSet printed = reference_gains();
  const DesignReport pr = validate_design(printed, plant);
  o.require(pr.algebraic_residual <= 2e-2,
            fmt("printed X, Y residual %.3e <= 2e-2", pr.algebraic_residual));
  double k_err = 0;
  for (Eigen::Index i = 0; i < printed.K().size(); ++i) {
    const double ref = printed.K().data()[i];
    const double got = pr.K_from_XY.data()[i];
    k_err = std::max(k_err, ref == 0 ? std::abs(got) : std::abs(got - ref) / std::abs(ref));
  }
  o.require(k_err <= 0.05, fmt("YX^-1 vs printed K max entry error %.3g%%", 100 * k_err));
  return o;
}

Outcome decay_identity() {
  Outcome o;
  const PlantMatrices plant = PlantMatrices::double_integrator(3);
  const JumpSpec jump = JumpSpec::block(3, pi);
  VectorXd x0(6);
  x0 << 0.4, -0.2, 0.1, 0.3, 0.1, -0.2;
  for (double mu : {-0.5, 0.0, 0.5}) {
    const GainSet gains = synthesize(plant, mu, 2.0);
    const SimRecord rec = simulate_impulsive(plant, gains, jump, x0, 3.0, 1e-3);
    const double err =
        decay_identity_median_error(rec.t, rec.homnorm, rec.jump_flag, mu, 2.0, 1e-3);
    o.require(rec.events.empty() && err < 1e-2,
              fmt2("mu=%+.1f median %.2e", mu, err));
  }
  return o;
}

Outcome convergence_classes(const ExperimentRuns& runs) {
  Outcome o;
  const RunReport& r = runs.first;
  const double slope = r.metrics["exponential"]["fitted_slope_per_s"].get<double>();
  o.require(check_passed(r, "exponential_slope"),
            fmt("mu=0 slope %.6f (rho = 10, tol 2%%)", slope));
  o.require(check_passed(r, "finite_time_settling_within_bound"),
            fmt("mu=-0.5 worst settling/bound %.4f over 20 runs",
                check_value(r, "finite_time_settling_within_bound")));
  const double bound = r.metrics["fixed_time"]["bound_s"].get<double>();
  o.require(check_passed(r, "fixed_time_uniform_bound"),
            fmt2("mu=0.5 worst time to 0.1 is %.4f s <= %.4f s for norms 1e1..1e4",
                 check_value(r, "fixed_time_uniform_bound"), bound));
  return o;
}

Outcome geometry() {
  Outcome o;
  constexpr int kSamples = 10000;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto vec = [&](double max_norm) {
    Vector3d v(normal(rng), normal(rng), normal(rng));
    return Vector3d(v.normalized() * max_norm * unit(rng));
  };

  double round_trip = 0, jacobian = 0, derivative = 0, identity = 0;
  for (int i = 0; i < kSamples; ++i) {
    const Vector3d v = vec(pi - 0.05);
    round_trip = std::max(round_trip, (log_so3(exp_so3(v)) - v).norm());
  }
  for (int i = 0; i < kSamples; ++i) {
    const Vector3d v = vec(2 * pi - 0.5);
    jacobian = std::max(jacobian,
                        (left_jacobian(v) * inv_left_jacobian(v) - Matrix3d::Identity()).norm());
  }
  const double h = 1e-6;
  for (int i = 0; i < kSamples; ++i) {
    const Vector3d v = vec(2 * pi - 0.5);
    Vector3d vdot = vec(3.0);
    if (vdot.norm() < 0.1) vdot = vdot.normalized() * 0.1;
    const Matrix3d fd = (inv_left_jacobian((v + h * vdot).eval()) -
                         inv_left_jacobian((v - h * vdot).eval())) / (2 * h);
    const Matrix3d analytic = d_inv_left_jacobian(v, vdot);
    derivative = std::max(derivative, (fd - analytic).norm() / analytic.norm());
  }
  for (int i = 0; i < kSamples; ++i) {
    const Matrix3d R = exp_so3(vec(pi));
    identity = std::max(identity, rotate_hat_identity_residual(R, vec(10.0)));
  }
  o.require(round_trip <= 1e-10, fmt("Exp/Log round trip %.2e", round_trip));
  o.require(jacobian <= 1e-10, fmt("J_l J_l^-1 - I %.2e", jacobian));
  o.require(derivative <= 1e-6, fmt("d/dt J_l^-1 vs FD %.2e relative", derivative));
  o.require(identity <= 1e-12, fmt("R hat(x) R^T - hat(Rx) %.2e", identity));
  return o;
}

Outcome jump_correctness(const std::map<ExperimentId, ExperimentRuns>& all) {
  Outcome o;
  std::size_t events = 0, checks = 0, failed = 0;
  for (const auto& [id, runs] : all) {
    events += runs.first.jump_count();
    for (const auto& c : runs.first.checks) {
      const bool relevant = c.name.starts_with("reset_non_expansive") ||
                            c.name.starts_with("post_reset_outside_jump_set") ||
                            c.name.starts_with("reset_preserves_attitude") ||
                            c.name.starts_with("event_count_finite");
      if (!relevant) continue;
      ++checks;
      if (!c.passed) {
        ++failed;
        std::printf("  failed: %s/%s = %.3g\n", to_string(id), c.name.c_str(), c.value);
      }
    }
  }
  o.require(events > 0, fmt("%.0f events across shipped experiments", events));
  o.require(failed == 0, fmt2("%.0f of %.0f per-run event checks failed", failed, checks));
  return o;
}

Outcome iss(const ExperimentRuns& runs) {
  Outcome o;
  const RunReport& r = runs.first;
  o.require(check_passed(r, "zero_noise_converges"),
            fmt("zero noise tail %.2e", check_value(r, "zero_noise_converges")));
  std::string curve = "delta1 tail sup";
  for (const auto& row : r.metrics["delta1"]) {
    curve += fmt(" %.3g", row["steady_state"].get<double>());
  }
  o.require(check_passed(r, "delta1_residual_finite_nondecreasing"),
            curve + " finite, non-decreasing");
  o.require(check_passed(r, "noise_removal_restores_convergence"),
            fmt("after noise removal %.2e < 1e-3",
                check_value(r, "noise_removal_restores_convergence")));
  return o;
}

Outcome determinism(const std::map<ExperimentId, ExperimentRuns>& all) {
  Outcome o;
  std::size_t files = 0;
  for (const auto& [id, runs] : all) {
    bool same = runs.first.manifest.size() == runs.second.manifest.size();
    for (std::size_t i = 0; same && i < runs.first.manifest.size(); ++i) {
      same = runs.first.manifest[i].file == runs.second.manifest[i].file &&
             runs.first.manifest[i].sha256 == runs.second.manifest[i].sha256 &&
             runs.first.manifest[i].bytes == runs.second.manifest[i].bytes;
    }
    files += runs.first.manifest.size();
    o.require(same, std::string(to_string(id)));
  }
  o.detail += fmt("; %.0f artifacts compared by sha256", files);
  return o;
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "homctl_acceptance";
  const auto all = run_all(root);

  const std::vector<std::pair<std::string, Outcome>> results{
      {"paper reproduction", paper_reproduction(all.at(ExperimentId::paper))},
      {"gain validation", gain_validation()},
      {"decay-rate identity", decay_identity()},
      {"convergence-class sweep", convergence_classes(all.at(ExperimentId::mu_sweep))},
      {"geometry suite", geometry()},
      {"jump correctness", jump_correctness(all)},
      {"input-to-state stability", iss(all.at(ExperimentId::iss_noise))},
      {"determinism", determinism(all)},
  };

  int failures = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& [name, outcome] = results[i];
    if (!outcome.pass) ++failures;
    std::printf("%s criterion %zu (%s): %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                name.c_str(), outcome.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(results.size()) - failures,
              results.size());
  return failures == 0 ? 0 : 1;
}
