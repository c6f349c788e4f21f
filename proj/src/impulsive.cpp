#include "homctl/impulsive.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace homctl {

namespace {

constexpr double kRearmFraction = 1e-9;
constexpr double kOvershootFraction = 1e-3;

VectorXd flow(const PlantMatrices& plant, const GainSet& gains, const VectorXd& x) {
  return plant.A * x + plant.B * u_hom(gains, x);
}

VectorXd rk4(const PlantMatrices& plant, const GainSet& gains, const VectorXd& x, double h) {
  if (h == 0.0) return x;
  const VectorXd k1 = flow(plant, gains, x);
  const VectorXd k2 = flow(plant, gains, x + (h / 2) * k1);
  const VectorXd k3 = flow(plant, gains, x + (h / 2) * k2);
  const VectorXd k4 = flow(plant, gains, x + h * k3);
  return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

}  // namespace

JumpSpec JumpSpec::block(int n, double radius) {
  if (n <= 0) throw std::invalid_argument("JumpSpec::block: n must be positive");
  JumpSpec spec;
  spec.Pi = MatrixXd::Identity(2 * n, 2 * n);
  spec.Pi.topLeftCorner(n, n) *= -1;
  spec.H = MatrixXd::Zero(2 * n, 2 * n);
  spec.H.topLeftCorner(n, n).setIdentity();
  spec.Q = MatrixXd::Zero(2 * n, 2 * n);
  spec.Q.topRightCorner(n, n).setIdentity();
  spec.Q.bottomLeftCorner(n, n).setIdentity();
  spec.radius = radius;
  spec.validate();
  return spec;
}

void JumpSpec::validate() const {
  const Eigen::Index N = Pi.rows();
  if (N == 0 || Pi.cols() != N || H.cols() != N || Q.rows() != N || Q.cols() != N) {
    throw std::invalid_argument("JumpSpec: inconsistent matrix sizes");
  }
  if (!(radius > 0)) throw std::invalid_argument("JumpSpec: radius must be positive");
  if ((Pi.transpose() * Q * Pi + Q).norm() > 1e-12 * (1 + Q.norm())) {
    throw std::invalid_argument("JumpSpec: Pi^T Q Pi != -Q");
  }
}

double JumpSpec::event_value(const Eigen::Ref<const VectorXd>& x) const {
  return (H * x).squaredNorm() - radius * radius;
}

double JumpSpec::outward_form(const Eigen::Ref<const VectorXd>& x) const {
  return x.dot(Q * x);
}

bool JumpSpec::in_jump_set(const Eigen::Ref<const VectorXd>& x, double tol) const {
  return std::abs(event_value(x)) <= tol * radius * radius && outward_form(x) > 0;
}

double SimRecord::max_lyapunov_increase() const {
  double worst = 0;
  for (std::size_t k = 1; k < homnorm.size(); ++k) {
    worst = std::max(worst, homnorm[k] - homnorm[k - 1]);
  }
  return worst;
}

SimRecord simulate_impulsive(const PlantMatrices& plant, const GainSet& gains,
                             const JumpSpec& jump, const VectorXd& x0, double T,
                             double dt, const ImpulsiveOptions& options) {
  jump.validate();
  const Eigen::Index N = plant.A.rows();
  if (x0.size() != N || gains.state_dim() != N || jump.Pi.rows() != N) {
    throw std::invalid_argument("simulate_impulsive: dimension mismatch");
  }
  if (!(T > 0) || !(dt > 0)) {
    throw std::invalid_argument("simulate_impulsive: T and dt must be positive");
  }
  const double r2 = jump.radius * jump.radius;
  if (jump.event_value(x0) > 1e-12 * r2) {
    throw std::invalid_argument(
        "simulate_impulsive: initial state lies outside the jump surface");
  }

  const auto& spec = gains.dilation();
  const long steps = static_cast<long>(std::ceil(T / dt - 1e-9));
  const double time_tol = 1e-12 * T;

  SimRecord rec;
  rec.t.reserve(steps + 1);
  rec.x.reserve(steps + 1);
  rec.homnorm.reserve(steps + 1);
  rec.jump_flag.reserve(steps + 1);
  auto log_row = [&](double t, const VectorXd& x, int flag) {
    rec.t.push_back(t);
    rec.x.push_back(x);
    rec.homnorm.push_back(hom_norm(spec, x));
    rec.jump_flag.push_back(flag);
  };

  VectorXd x = x0;
  bool armed = true;
  log_row(0.0, x, 0);

  for (long k = 0; k < steps; ++k) {
    const double t0 = k * dt;
    const double t1 = std::min((k + 1) * dt, T);
    const double h = t1 - t0;
    const double e0 = jump.event_value(x);
    VectorXd next = rk4(plant, gains, x, h);
    const double e1 = jump.event_value(next);

    if (armed && e0 <= 0 && e1 >= 0 && (e0 < 0 || jump.outward_form(x) > 0)) {
      double lo = 0, hi = h;
      if (e0 < 0) {
        while (hi - lo > time_tol) {
          const double mid = (lo + hi) / 2;
          if (jump.event_value(rk4(plant, gains, x, mid)) < 0) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
      } else {
        hi = 0;
      }
      const VectorXd x_minus = rk4(plant, gains, x, hi);
      if (!(jump.outward_form(x_minus) > 0)) {
        std::ostringstream msg;
        msg << "simulate_impulsive: surface crossed without outward flow at t = "
            << t0 + hi;
        throw SimulationError(msg.str());
      }
      const VectorXd x_plus = jump.Pi * x_minus;
      JumpEvent ev;
      ev.t = t0 + hi;
      ev.x_minus = x_minus;
      ev.x_plus = x_plus;
      ev.norm_minus = hom_norm(spec, x_minus);
      ev.norm_plus = hom_norm(spec, x_plus);
      rec.events.push_back(ev);
      if (static_cast<int>(rec.events.size()) > options.max_events) {
        std::ostringstream msg;
        msg << "simulate_impulsive: more than " << options.max_events
            << " events by t = " << ev.t << " (Zeno guard)";
        throw SimulationError(msg.str());
      }
      log_row(ev.t, x_minus, 0);
      log_row(ev.t, x_plus, 1);
      armed = false;
      next = rk4(plant, gains, x_plus, h - hi);
    }

    const double e_next = jump.event_value(next);
    if (std::sqrt(std::max(0.0, e_next + r2)) > jump.radius * (1 + kOvershootFraction)) {
      std::ostringstream msg;
      msg << "simulate_impulsive: ||Hx|| overshoots the jump surface at t = " << t1
          << " without a detected crossing";
      throw SimulationError(msg.str());
    }
    if (!armed && e_next < -kRearmFraction * r2) armed = true;
    x = std::move(next);
    log_row(t1, x, 0);
  }

  rec.settling = measure_settling(rec.t, rec.homnorm, options.settling_threshold);
  return rec;
}

const char* to_string(ConvergenceClass kind) {
  switch (kind) {
    case ConvergenceClass::finite_time: return "finite-time";
    case ConvergenceClass::exponential: return "exponential";
    case ConvergenceClass::nearly_fixed_time: return "nearly-fixed-time";
  }
  return "unknown";
}

double SettlingBound::time_to_reach(double level) const {
  if (norm0 <= level) return 0.0;
  switch (kind) {
    case ConvergenceClass::finite_time:
      return (std::pow(norm0, -mu) - std::pow(level, -mu)) / (-rho * mu);
    case ConvergenceClass::exponential:
      return std::log(norm0 / level) / rho;
    case ConvergenceClass::nearly_fixed_time:
      return (std::pow(level, -mu) - std::pow(norm0, -mu)) / (rho * mu);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double SettlingBound::uniform_bound(double level) const {
  if (kind != ConvergenceClass::nearly_fixed_time) {
    return std::numeric_limits<double>::infinity();
  }
  return 1.0 / (rho * mu * std::pow(level, mu));
}

SettlingBound settling_estimate(double mu, double rho, double norm0) {
  if (!(norm0 >= 0)) throw std::invalid_argument("settling_estimate: norm0 must be >= 0");
  if (!(rho > 0)) throw std::invalid_argument("settling_estimate: rho must be positive");
  SettlingBound bound;
  bound.mu = mu;
  bound.rho = rho;
  bound.norm0 = norm0;
  if (mu < 0) {
    bound.kind = ConvergenceClass::finite_time;
    bound.time_s = std::pow(norm0, -mu) / (-rho * mu);
  } else if (mu == 0) {
    bound.kind = ConvergenceClass::exponential;
    bound.time_s = norm0 == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    bound.kind = ConvergenceClass::nearly_fixed_time;
    bound.time_s = norm0 == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return bound;
}

SettlingBound settling_estimate(const GainSet& gains, double norm0) {
  return settling_estimate(gains.mu(), gains.rho(), norm0);
}

double measure_settling(const std::vector<double>& t, const std::vector<double>& values,
                        double eps) {
  if (!(eps > 0)) throw std::invalid_argument("measure_settling: eps must be positive");
  if (t.size() != values.size()) {
    throw std::invalid_argument("measure_settling: length mismatch");
  }
  if (t.empty()) return 0.0;
  std::size_t k = values.size();
  while (k > 0 && values[k - 1] <= eps) --k;
  if (k == values.size()) return std::numeric_limits<double>::infinity();
  return t[k];
}

double commutation_residual(const GainSet& gains, const JumpSpec& jump,
                            const Eigen::Ref<const VectorXd>& x) {
  const auto& spec = gains.dilation();
  const double r = hom_norm(spec, x);
  if (r == 0) return 0.0;
  const MatrixXd d = spec.dilation(-std::log(r));
  return (d * (jump.Pi * x) - jump.Pi * (d * x)).norm();
}

double decay_identity_median_error(const std::vector<double>& t,
                                   const std::vector<double>& homnorm,
                                   const std::vector<int>& jump_flag, double mu,
                                   double rho, double min_norm) {
  std::vector<double> errors;
  for (std::size_t k = 1; k + 1 < t.size(); ++k) {
    if (jump_flag[k - 1] || jump_flag[k] || jump_flag[k + 1]) continue;
    const double h_back = t[k] - t[k - 1];
    const double h_fwd = t[k + 1] - t[k];
    if (!(h_back > 0) || std::abs(h_fwd - h_back) > 1e-9 * h_back) continue;
    if (homnorm[k] < min_norm || homnorm[k - 1] < min_norm || homnorm[k + 1] < min_norm) {
      continue;
    }
    const double fd = (homnorm[k + 1] - homnorm[k - 1]) / (h_back + h_fwd);
    const double expected = -rho * std::pow(homnorm[k], 1 + mu);
    errors.push_back(std::abs(fd - expected) / std::abs(expected));
  }
  if (errors.empty()) return std::numeric_limits<double>::quiet_NaN();
  auto mid = errors.begin() + errors.size() / 2;
  std::nth_element(errors.begin(), mid, errors.end());
  return *mid;
}

double log_slope(const std::vector<double>& t, const std::vector<double>& values,
                 double t0, double t1) {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t0 || t[k] > t1 || !(values[k] > 0)) continue;
    const double y = std::log(values[k]);
    n += 1;
    sx += t[k];
    sy += y;
    sxx += t[k] * t[k];
    sxy += t[k] * y;
  }
  const double denom = n * sxx - sx * sx;
  if (n < 2 || denom == 0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / denom;
}

}  // namespace homctl
