#include "homctl/attitude.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <sstream>

namespace homctl {

namespace {

using std::numbers::pi;

constexpr double kRearmFraction = 1e-9;
constexpr double kOvershootFraction = 1e-3;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double polynomial(const Eigen::Matrix<double, 1, 5>& c, double t, int derivative) {
  double value = 0;
  double power = 1;
  for (int k = derivative; k < 5; ++k) {
    double factor = 1;
    for (int j = 0; j < derivative; ++j) factor *= (k - j);
    value += factor * c(k) * power;
    power *= t;
  }
  return value;
}

Vector3d other_branch(const Vector3d& theta) {
  const double norm = theta.norm();
  if (norm == 0) return theta;
  return theta - (2 * pi / norm) * theta;
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t channel, std::uint64_t step,
                       std::uint64_t component) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ channel);
  h = splitmix64(h ^ step);
  h = splitmix64(h ^ component);
  const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
  return 2 * unit - 1;
}

InertiaSpec InertiaSpec::diagonal(const Vector3d& d) {
  InertiaSpec spec;
  spec.J = d.asDiagonal();
  spec.validate();
  return spec;
}

InertiaSpec InertiaSpec::reference() { return diagonal(Vector3d(1.0e-2, 8.2e-3, 1.48e-2)); }

void InertiaSpec::validate() const {
  if (!J.allFinite() || (J - J.transpose()).norm() > 1e-12 * J.norm()) {
    throw std::invalid_argument("InertiaSpec: J must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix3d> eig(J, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0) {
    throw std::invalid_argument("InertiaSpec: J must be positive definite");
  }
}

TrajectorySpec TrajectorySpec::constant(const Vector3d& phi) {
  TrajectorySpec traj;
  traj.coefficients.col(0) = phi;
  return traj;
}

TrajectorySpec TrajectorySpec::reference() {
  TrajectorySpec traj;
  traj.coefficients.row(0) << 0, 1.5, 0, 0, 0;
  traj.coefficients.row(1) << 0, -1, 0.1, 0, 0;
  traj.coefficients.row(2) << 0, 1, 0.1, 0, 0;
  return traj;
}

Vector3d TrajectorySpec::phi(double t) const {
  return {polynomial(coefficients.row(0), t, 0), polynomial(coefficients.row(1), t, 0),
          polynomial(coefficients.row(2), t, 0)};
}

Vector3d TrajectorySpec::phi_dot(double t) const {
  return {polynomial(coefficients.row(0), t, 1), polynomial(coefficients.row(1), t, 1),
          polynomial(coefficients.row(2), t, 1)};
}

Vector3d TrajectorySpec::phi_ddot(double t) const {
  return {polynomial(coefficients.row(0), t, 2), polynomial(coefficients.row(1), t, 2),
          polynomial(coefficients.row(2), t, 2)};
}

DesiredKinematics desired_kinematics(const TrajectorySpec& traj, double t) {
  const Vector3d phi = traj.phi(t);
  const Vector3d phi_dot = traj.phi_dot(t);
  const Vector3d phi_ddot = traj.phi_ddot(t);
  if (phi.norm() >= 2 * pi - detail::kJacobianSingularMargin) {
    std::ostringstream msg;
    msg << "desired_kinematics: ||phi(" << t << ")|| = " << phi.norm()
        << " reaches the 2 pi Jacobian singularity";
    throw std::domain_error(msg.str());
  }
  DesiredKinematics out;
  out.R_d = exp_so3(phi);
  const Matrix3d Jr = detail::right_jacobian(phi);
  out.omega_d = Jr * phi_dot;
  const Vector3d neg_phi = -phi;
  const Vector3d neg_phi_dot = -phi_dot;
  out.omega_d_dot = d_left_jacobian(neg_phi, neg_phi_dot) * phi_dot + Jr * phi_ddot;
  return out;
}

Vector6d ErrorState::xi() const {
  Vector6d out;
  out << theta, theta_dot;
  return out;
}

ErrorState ErrorState::from_xi(const Eigen::Ref<const VectorXd>& xi) {
  if (xi.size() != 6) throw std::invalid_argument("ErrorState::from_xi: need 6 entries");
  ErrorState err;
  err.theta = xi.head<3>();
  err.theta_dot = xi.tail<3>();
  return err;
}

ErrorState error_state(const BodyState& state, const DesiredKinematics& desired,
                       const ErrorState* prev) {
  ErrorState err;
  const Vector3d raw = log_so3((state.R * desired.R_d.transpose()).eval());
  err.theta = raw;
  if (prev) {
    const Vector3d alt = other_branch(raw);
    if ((alt - prev->theta).norm() < (raw - prev->theta).norm()) err.theta = alt;
  }
  err.theta_dot = inv_left_jacobian(err.theta) * (state.R * (state.omega - desired.omega_d));
  return err;
}

ErrorState error_state(const BodyState& state, const TrajectorySpec& traj, double t,
                       const ErrorState* prev) {
  return error_state(state, desired_kinematics(traj, t), prev);
}

bool jump_check(const ErrorState& err, double tol) {
  return std::abs(err.theta.norm() - pi) <= tol * pi && err.theta.dot(err.theta_dot) > 0;
}

BodyState body_state_from_error(const ErrorState& err, const TrajectorySpec& traj, double t) {
  const DesiredKinematics desired = desired_kinematics(traj, t);
  BodyState state;
  state.R = exp_so3(err.theta) * desired.R_d;
  state.omega = desired.omega_d + state.R.transpose() * (left_jacobian(err.theta) * err.theta_dot);
  return state;
}

Vector3d torque(const BodyState& state, const ErrorState& err, const GainSet& gains,
                const InertiaSpec& inertia, const DesiredKinematics& desired,
                const std::optional<Vector3d>& u) {
  const Vector3d command = u ? *u : Vector3d(u_hom(gains, err.xi()));
  const Matrix3d Jl = left_jacobian(err.theta);
  const Vector3d rel = state.R * (state.omega - desired.omega_d);
  const Vector3d delta =
      -state.R.transpose() * (Jl * (d_inv_left_jacobian(err.theta, err.theta_dot) * rel));
  const Vector3d accel = state.R.transpose() * (Jl * command) + delta -
                         desired.omega_d.cross(state.omega) + desired.omega_d_dot;
  return inertia.J * accel - state.omega.cross(inertia.J * state.omega);
}

Vector3d body_acceleration(const BodyState& state, const Vector3d& M,
                           const InertiaSpec& inertia) {
  return inertia.J.llt().solve(state.omega.cross(inertia.J * state.omega) + M);
}

Vector3d error_acceleration(const BodyState& state, const ErrorState& err,
                            const Vector3d& omega_dot, const DesiredKinematics& desired) {
  const Vector3d rel_body = state.omega - desired.omega_d;
  const Vector3d rel = state.R * rel_body;
  const Vector3d rel_rate =
      state.R * (state.omega.cross(rel_body)) + state.R * (omega_dot - desired.omega_d_dot);
  return d_inv_left_jacobian(err.theta, err.theta_dot) * rel +
         inv_left_jacobian(err.theta) * rel_rate;
}

void NoiseSpec::validate() const {
  if (!(delta1_amplitude >= 0) || !(delta2_amplitude >= 0)) {
    throw std::invalid_argument("NoiseSpec: amplitudes must be >= 0");
  }
}

bool NoiseSpec::active(double t) const { return t < cutoff_s; }

Vector6d NoiseSpec::delta1(std::uint64_t step) const {
  Vector6d out;
  for (int i = 0; i < 6; ++i) out(i) = delta1_amplitude * counter_uniform(seed, 1, step, i);
  return out;
}

Vector6d NoiseSpec::delta2(std::uint64_t step) const {
  Vector6d out;
  for (int i = 0; i < 6; ++i) out(i) = delta2_amplitude * counter_uniform(seed, 2, step, i);
  return out;
}

double TrackingRecord::max_lyapunov_increase() const {
  double worst = 0;
  for (std::size_t k = 1; k < homnorm.size(); ++k) {
    worst = std::max(worst, homnorm[k] - homnorm[k - 1]);
  }
  return worst;
}

double TrackingRecord::sup_after(double t0) const {
  double sup = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] >= t0) sup = std::max(sup, homnorm[k]);
  }
  return sup;
}

namespace {

struct Disturbance {
  Vector6d delta1 = Vector6d::Zero();
  Vector3d accel = Vector3d::Zero();  // last three entries of delta2
};

class TrackingIntegrator {
 public:
  TrackingIntegrator(const InertiaSpec& inertia, const GainSet& gains,
                     const TrajectorySpec& traj)
      : inertia_(inertia), gains_(gains), traj_(traj) {}

  struct Evaluation {
    ErrorState err;
    Vector3d M;
    Vector3d omega_dot;
    DesiredKinematics desired;
  };

  Evaluation evaluate(const BodyState& state, double t, const ErrorState& branch,
                      const Disturbance& noise) const {
    Evaluation ev;
    ev.desired = desired_kinematics(traj_, t);
    ev.err = error_state(state, ev.desired, &branch);
    const VectorXd measured = ev.err.xi() + noise.delta1;
    const Vector3d u = u_hom(gains_, measured);
    ev.M = torque(state, ev.err, gains_, inertia_, ev.desired, u);
    ev.omega_dot = body_acceleration(state, ev.M, inertia_);
    if (!noise.accel.isZero(0.0)) {
      ev.omega_dot += state.R.transpose() * (left_jacobian(ev.err.theta) * noise.accel);
    }
    return ev;
  }

  // One RK4 step of the local-coordinate system R = R0 Exp(sigma),
  // sigma' = J_r^{-1}(sigma) omega.
  BodyState step(const BodyState& s0, double t, double h, const ErrorState& branch,
                 const Disturbance& noise) const {
    if (h == 0.0) return s0;
    auto deriv = [&](const Vector3d& sigma, const Vector3d& omega, double tt,
                     Vector3d& dsigma, Vector3d& domega) {
      BodyState s{(s0.R * exp_so3(sigma)).eval(), omega};
      domega = evaluate(s, tt, branch, noise).omega_dot;
      dsigma = detail::inv_right_jacobian(sigma) * omega;
    };
    Vector3d s1, w1, s2, w2, s3, w3, s4, w4;
    deriv(Vector3d::Zero(), s0.omega, t, s1, w1);
    deriv((h / 2) * s1, s0.omega + (h / 2) * w1, t + h / 2, s2, w2);
    deriv((h / 2) * s2, s0.omega + (h / 2) * w2, t + h / 2, s3, w3);
    deriv(h * s3, s0.omega + h * w3, t + h, s4, w4);
    BodyState out;
    const Vector3d sigma = (h / 6) * (s1 + 2 * s2 + 2 * s3 + s4);
    out.R = s0.R * exp_so3(sigma);
    out.omega = s0.omega + (h / 6) * (w1 + 2 * w2 + 2 * w3 + w4);
    return out;
  }

 private:
  const InertiaSpec& inertia_;
  const GainSet& gains_;
  const TrajectorySpec& traj_;
};

}  // namespace

TrackingRecord simulate_tracking(const InertiaSpec& inertia, const GainSet& gains,
                                 const TrajectorySpec& traj, const BodyState& state0,
                                 const std::optional<NoiseSpec>& noise, double T, double dt,
                                 const TrackingOptions& options) {
  inertia.validate();
  if (gains.state_dim() != 6 || gains.input_dim() != 3) {
    throw std::invalid_argument("simulate_tracking: gains must be for n = 3");
  }
  if (!(T > 0) || !(dt > 0)) {
    throw std::invalid_argument("simulate_tracking: T and dt must be positive");
  }
  if (!is_rotation(state0.R, 1e-9)) {
    throw std::invalid_argument("simulate_tracking: R0 is not a rotation matrix");
  }
  if (noise) noise->validate();
  const int stride = std::max(1, options.log_stride);

  const TrackingIntegrator integrator(inertia, gains, traj);
  const auto& spec = gains.dilation();
  const double r2 = pi * pi;
  const long steps = static_cast<long>(std::ceil(T / dt - 1e-9));
  const double time_tol = 1e-12 * T;

  auto disturbance_at = [&](long k, double t) {
    Disturbance d;
    if (noise && noise->active(t)) {
      d.delta1 = noise->delta1(static_cast<std::uint64_t>(k));
      d.accel = noise->delta2(static_cast<std::uint64_t>(k)).tail<3>();
    }
    return d;
  };

  TrackingRecord rec;
  const std::size_t expected_rows = static_cast<std::size_t>(steps / stride + 2);
  rec.t.reserve(expected_rows);
  rec.theta.reserve(expected_rows);
  rec.theta_dot.reserve(expected_rows);
  rec.omega.reserve(expected_rows);
  rec.omega_d.reserve(expected_rows);
  rec.M.reserve(expected_rows);
  rec.homnorm.reserve(expected_rows);
  rec.jump_flag.reserve(expected_rows);

  auto log_row = [&](double t, const BodyState& s, const ErrorState& branch,
                     const Disturbance& d, int flag) {
    const auto ev = integrator.evaluate(s, t, branch, d);
    rec.t.push_back(t);
    rec.theta.push_back(ev.err.theta);
    rec.theta_dot.push_back(ev.err.theta_dot);
    rec.omega.push_back(s.omega);
    rec.omega_d.push_back(ev.desired.omega_d);
    rec.M.push_back(ev.M);
    rec.homnorm.push_back(hom_norm(spec, ev.err.xi()));
    rec.jump_flag.push_back(flag);
  };

  BodyState state = state0;
  ErrorState err = error_state(state, traj, 0.0);
  if (err.theta.squaredNorm() > r2 * (1 + 1e-12)) {
    throw std::invalid_argument("simulate_tracking: initial error outside the pi-ball");
  }
  bool armed = true;
  log_row(0.0, state, err, disturbance_at(0, 0.0), 0);

  for (long k = 0; k < steps; ++k) {
    const double t0 = k * dt;
    const double t1 = std::min((k + 1) * dt, T);
    const double h = t1 - t0;
    const Disturbance d = disturbance_at(k, t0);

    const double e0 = err.theta.squaredNorm() - r2;
    BodyState next = integrator.step(state, t0, h, err, d);
    ErrorState next_err = error_state(next, traj, t1, &err);
    const double e1 = next_err.theta.squaredNorm() - r2;

    if (armed && e0 < 0 && e1 >= 0) {
      double lo = 0, hi = h;
      while (hi - lo > time_tol) {
        const double mid = (lo + hi) / 2;
        const BodyState probe = integrator.step(state, t0, mid, err, d);
        if (error_state(probe, traj, t0 + mid, &err).theta.squaredNorm() < r2) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double t_jump = t0 + hi;
      const BodyState at_jump = integrator.step(state, t0, hi, err, d);
      const DesiredKinematics desired = desired_kinematics(traj, t_jump);
      const ErrorState minus = error_state(at_jump, desired, &err);
      if (!(minus.theta.dot(minus.theta_dot) > 0)) {
        std::ostringstream msg;
        msg << "simulate_tracking: pi-sphere crossed without outward motion at t = "
            << t_jump;
        throw SimulationError(msg.str());
      }
      ErrorState plus;
      plus.theta = other_branch(minus.theta);
      plus.theta_dot =
          inv_left_jacobian(plus.theta) * (at_jump.R * (at_jump.omega - desired.omega_d));

      TrackingEvent event;
      event.t = t_jump;
      event.xi_minus = minus.xi();
      event.xi_plus = plus.xi();
      event.norm_minus = hom_norm(spec, event.xi_minus);
      event.norm_plus = hom_norm(spec, event.xi_plus);
      Vector6d reset = event.xi_minus;
      reset.head<3>() *= -1;
      event.reset_mismatch = (reset - event.xi_plus).norm();
      event.attitude_mismatch = (exp_so3(plus.theta) - exp_so3(minus.theta)).norm();
      event.flip_residual = (plus.theta + minus.theta).norm();
      rec.events.push_back(event);
      if (static_cast<int>(rec.events.size()) > options.max_events) {
        std::ostringstream msg;
        msg << "simulate_tracking: more than " << options.max_events
            << " jumps by t = " << t_jump << " (Zeno guard)";
        throw SimulationError(msg.str());
      }
      log_row(t_jump, at_jump, minus, d, 0);
      log_row(t_jump, at_jump, plus, d, 1);
      armed = false;
      next = integrator.step(at_jump, t_jump, h - hi, plus, d);
      next_err = error_state(next, traj, t1, &plus);
    }

    const double e_next = next_err.theta.squaredNorm() - r2;
    if (next_err.theta.norm() > pi * (1 + kOvershootFraction)) {
      std::ostringstream msg;
      msg << "simulate_tracking: ||theta_e|| = " << next_err.theta.norm()
          << " overshoots pi at t = " << t1 << " without a detected jump";
      throw SimulationError(msg.str());
    }
    if (!armed && e_next < -kRearmFraction * r2) armed = true;

    if ((k + 1) % options.projection_interval == 0) {
      const double drift = (next.R.transpose() * next.R - Matrix3d::Identity()).norm();
      rec.max_rotation_drift = std::max(rec.max_rotation_drift, drift);
      if (drift > options.max_rotation_drift) {
        std::ostringstream msg;
        msg << "simulate_tracking: rotation drift " << drift << " at t = " << t1;
        throw SimulationError(msg.str());
      }
      next.R = project_to_so3(next.R);
      next_err = error_state(next, traj, t1, &next_err);
    }

    state = next;
    err = next_err;
    if ((k + 1) % stride == 0 || k + 1 == steps) {
      log_row(t1, state, err, disturbance_at(k + 1, t1), 0);
    }
  }

  rec.settling = measure_settling(rec.t, rec.homnorm, options.settling_threshold);
  return rec;
}

std::vector<IssPoint> iss_sweep(const InertiaSpec& inertia, const GainSet& gains,
                                const TrajectorySpec& traj, const BodyState& state0,
                                const NoiseSpec& base, NoiseChannel channel,
                                const std::vector<double>& amplitudes, double T, double dt,
                                const TrackingOptions& options) {
  if (!std::is_sorted(amplitudes.begin(), amplitudes.end())) {
    throw std::invalid_argument("iss_sweep: amplitudes must be sorted");
  }
  std::vector<std::future<IssPoint>> jobs;
  jobs.reserve(amplitudes.size());
  for (double amplitude : amplitudes) {
    if (!(amplitude >= 0)) throw std::invalid_argument("iss_sweep: amplitudes must be >= 0");
    NoiseSpec noise = base;
    if (channel == NoiseChannel::delta1) {
      noise.delta1_amplitude = amplitude;
    } else {
      noise.delta2_amplitude = amplitude;
    }
    jobs.push_back(std::async(std::launch::async, [=, &inertia, &gains, &traj, &state0] {
      const auto rec = simulate_tracking(inertia, gains, traj, state0, noise, T, dt, options);
      IssPoint point;
      point.amplitude = amplitude;
      point.steady_state = rec.sup_after(0.8 * T);
      point.jumps = rec.events.size();
      return point;
    }));
  }
  std::vector<IssPoint> out;
  out.reserve(jobs.size());
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

}  // namespace homctl
