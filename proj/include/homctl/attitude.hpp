#pragma once

// Rigid-body attitude tracking with the homogeneous controller acting on the
// exponential-coordinate error xi = (theta_e, theta_e'), and a closed-loop
// simulator on (R, omega) that realizes the pi-sphere reset as a change of
// logarithm branch.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "homctl/impulsive.hpp"
#include "homctl/so3.hpp"
#include "homctl/synthesis.hpp"
#include "homctl/types.hpp"

namespace homctl {

struct InertiaSpec {
  Matrix3d J = Matrix3d::Identity();

  static InertiaSpec diagonal(const Vector3d& d);
  static InertiaSpec reference();  ///< diag(1.0e-2, 8.2e-3, 1.48e-2) kg m^2
  /// Throws std::invalid_argument unless J is symmetric positive definite.
  void validate() const;
};

struct BodyState {
  Matrix3d R = Matrix3d::Identity();
  Vector3d omega = Vector3d::Zero();
};

/// phi_i(t) = sum_k coefficients(i, k) t^k, desired attitude R_d = Exp(phi(t)).
struct TrajectorySpec {
  Eigen::Matrix<double, 3, 5> coefficients = Eigen::Matrix<double, 3, 5>::Zero();

  static TrajectorySpec constant(const Vector3d& phi);
  /// phi(t) = (1.5 t, 0.1 t^2 - t, 0.1 t^2 + t)
  static TrajectorySpec reference();

  Vector3d phi(double t) const;
  Vector3d phi_dot(double t) const;
  Vector3d phi_ddot(double t) const;
};

struct DesiredKinematics {
  Matrix3d R_d;
  Vector3d omega_d;
  Vector3d omega_d_dot;
};

/// omega_d = J_r(phi) phi', omega_d' = d/dt[J_r(phi)] phi' + J_r(phi) phi''.
/// Throws std::domain_error when ||phi(t)|| >= 2 pi - 1e-6.
DesiredKinematics desired_kinematics(const TrajectorySpec& traj, double t);

struct ErrorState {
  Vector3d theta = Vector3d::Zero();
  Vector3d theta_dot = Vector3d::Zero();

  Vector6d xi() const;
  static ErrorState from_xi(const Eigen::Ref<const VectorXd>& xi);
};

/// theta_e = Log(R R_d^T) on the branch closest to prev->theta (principal branch
/// without prev); theta_e' = J_l^{-1}(theta_e) R (omega - omega_d).
ErrorState error_state(const BodyState& state, const DesiredKinematics& desired,
                       const ErrorState* prev = nullptr);
ErrorState error_state(const BodyState& state, const TrajectorySpec& traj, double t,
                       const ErrorState* prev = nullptr);

/// ||theta|| within tol of pi (relative) and theta . theta' > 0.
bool jump_check(const ErrorState& err, double tol = 1e-9);

/// Body state reproducing a given error state at time t.
BodyState body_state_from_error(const ErrorState& err, const TrajectorySpec& traj, double t);

/// M = J [R^T J_l u + Delta - omega_d x omega + omega_d'] - omega x J omega with
/// Delta = -R^T J_l (d/dt J_l^{-1}) R (omega - omega_d), J_l = J_l(theta_e).
/// u defaults to u_hom(xi).
Vector3d torque(const BodyState& state, const ErrorState& err, const GainSet& gains,
                const InertiaSpec& inertia, const DesiredKinematics& desired,
                const std::optional<Vector3d>& u = std::nullopt);

/// omega' = J^{-1}(omega x J omega + M)
Vector3d body_acceleration(const BodyState& state, const Vector3d& M,
                           const InertiaSpec& inertia);

/// theta_e'' implied by the body dynamics under torque M, computed from
/// d/dt [J_l^{-1}(theta) R (omega - omega_d)].
Vector3d error_acceleration(const BodyState& state, const ErrorState& err,
                            const Vector3d& omega_dot, const DesiredKinematics& desired);

/// Uniform in [-1, 1], a pure function of its arguments.
double counter_uniform(std::uint64_t seed, std::uint64_t channel, std::uint64_t step,
                       std::uint64_t component);

/// Bounded uniform noise, held over each control step. delta1 perturbs the
/// measured xi; the last three entries of delta2 disturb the error
/// acceleration (the first three are not realizable and are dropped).
struct NoiseSpec {
  double delta1_amplitude = 0;
  double delta2_amplitude = 0;
  std::uint64_t seed = 0;
  double cutoff_s = std::numeric_limits<double>::infinity();

  void validate() const;
  bool active(double t) const;
  /// Uniform sample in [-amplitude, amplitude] per component, a pure function
  /// of (seed, channel, step).
  Vector6d delta1(std::uint64_t step) const;
  Vector6d delta2(std::uint64_t step) const;
};

struct TrackingEvent {
  double t = 0;
  Vector6d xi_minus;
  Vector6d xi_plus;
  double norm_minus = 0;
  double norm_plus = 0;
  double reset_mismatch = 0;     ///< ||Pi xi^- - xi^+||
  double attitude_mismatch = 0;  ///< ||Exp(theta^+) - Exp(theta^-)||_F
  double flip_residual = 0;      ///< ||theta^+ + theta^-||
};

struct TrackingRecord {
  std::vector<double> t;
  std::vector<Vector3d> theta;
  std::vector<Vector3d> theta_dot;
  std::vector<Vector3d> omega;
  std::vector<Vector3d> omega_d;
  std::vector<Vector3d> M;
  std::vector<double> homnorm;
  std::vector<int> jump_flag;
  std::vector<TrackingEvent> events;
  double settling = std::numeric_limits<double>::infinity();
  double max_rotation_drift = 0;  ///< largest ||R^T R - I|| seen before projection

  std::size_t size() const { return t.size(); }
  double max_lyapunov_increase() const;
  /// Supremum of homnorm over rows with t >= t0.
  double sup_after(double t0) const;
};

struct TrackingOptions {
  double settling_threshold = 1e-3;
  int max_events = 100;
  int projection_interval = 100;
  double max_rotation_drift = 1e-6;
  int log_stride = 1;  ///< log every k-th grid row; events and the last row always
};

TrackingRecord simulate_tracking(const InertiaSpec& inertia, const GainSet& gains,
                                 const TrajectorySpec& traj, const BodyState& state0,
                                 const std::optional<NoiseSpec>& noise, double T, double dt,
                                 const TrackingOptions& options = {});

enum class NoiseChannel { delta1, delta2 };

struct IssPoint {
  double amplitude = 0;
  double steady_state = 0;  ///< sup of ||xi||_d over the final 20% of the horizon
  std::size_t jumps = 0;
};

/// Runs one noisy closed loop per amplitude (concurrently), same seed for all.
std::vector<IssPoint> iss_sweep(const InertiaSpec& inertia, const GainSet& gains,
                                const TrajectorySpec& traj, const BodyState& state0,
                                const NoiseSpec& base, NoiseChannel channel,
                                const std::vector<double>& amplitudes, double T, double dt,
                                const TrackingOptions& options = {});

}  // namespace homctl
