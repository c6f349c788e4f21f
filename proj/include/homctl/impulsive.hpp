#pragma once

// Linear impulsive closed loop
//   x' = A x + B u_hom(x)  while x is off the jump set,
//   x  = Pi x^-            when x^- reaches it,
// with event location and settling-time instrumentation.

#include <limits>
#include <stdexcept>
#include <vector>

#include "homctl/synthesis.hpp"
#include "homctl/types.hpp"

namespace homctl {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Jump surface ||H x|| = radius with outward flow x^T Q x > 0, reset x = Pi x.
struct JumpSpec {
  MatrixXd Pi;
  MatrixXd H;
  MatrixXd Q;
  double radius = 0;

  /// Pi = diag(-I, I), H = diag(I, 0), Q = [0 I; I 0].
  static JumpSpec block(int n, double radius);

  /// Throws std::invalid_argument on inconsistent sizes, radius <= 0 or
  /// Pi^T Q Pi != -Q.
  void validate() const;

  /// e(x) = ||H x||^2 - radius^2
  double event_value(const Eigen::Ref<const VectorXd>& x) const;
  double outward_form(const Eigen::Ref<const VectorXd>& x) const;
  bool in_jump_set(const Eigen::Ref<const VectorXd>& x, double tol = 1e-9) const;
};

struct JumpEvent {
  double t = 0;
  VectorXd x_minus;
  VectorXd x_plus;
  double norm_minus = 0;
  double norm_plus = 0;
};

/// Rows are the time grid plus two rows per event (pre-jump with flag 0,
/// post-jump with flag 1) at the event time.
struct SimRecord {
  std::vector<double> t;
  std::vector<VectorXd> x;
  std::vector<double> homnorm;
  std::vector<int> jump_flag;
  std::vector<JumpEvent> events;
  double settling = std::numeric_limits<double>::infinity();

  std::size_t size() const { return t.size(); }
  /// Largest increase of homnorm between consecutive rows (0 if none).
  double max_lyapunov_increase() const;
};

struct ImpulsiveOptions {
  double settling_threshold = 1e-3;
  int max_events = 100;
};

SimRecord simulate_impulsive(const PlantMatrices& plant, const GainSet& gains,
                             const JumpSpec& jump, const VectorXd& x0, double T,
                             double dt, const ImpulsiveOptions& options = {});

enum class ConvergenceClass { finite_time, exponential, nearly_fixed_time };

const char* to_string(ConvergenceClass kind);

/// Convergence bound implied by V' = -rho V^{1+mu} for V = ||x||_d.
struct SettlingBound {
  ConvergenceClass kind = ConvergenceClass::finite_time;
  double mu = 0;
  double rho = 0;
  double norm0 = 0;
  /// norm0^{-mu} / (-rho mu) for mu < 0; +infinity otherwise.
  double time_s = 0;

  /// Exact time for V to decay from norm0 to level (0 if norm0 <= level).
  double time_to_reach(double level) const;
  /// 1 / (rho mu level^mu), independent of norm0; only meaningful for mu > 0.
  double uniform_bound(double level) const;
};

SettlingBound settling_estimate(const GainSet& gains, double norm0);
SettlingBound settling_estimate(double mu, double rho, double norm0);

/// First logged time after which every value stays <= eps; +infinity if the
/// last value exceeds eps.
double measure_settling(const std::vector<double>& t, const std::vector<double>& values,
                        double eps);

/// ||d(-ln ||x||_d) Pi x - Pi d(-ln ||x||_d) x||
double commutation_residual(const GainSet& gains, const JumpSpec& jump,
                            const Eigen::Ref<const VectorXd>& x);

/// Median of |D - expected| / |expected| over interior grid rows, where D is the
/// central difference of homnorm and expected = -rho homnorm^{1+mu}. Rows
/// adjacent to events or with homnorm below min_norm are skipped. Returns NaN
/// when no row qualifies.
double decay_identity_median_error(const std::vector<double>& t,
                                   const std::vector<double>& homnorm,
                                   const std::vector<int>& jump_flag, double mu,
                                   double rho, double min_norm);

/// Least-squares slope of ln(values) against t over rows with t in [t0, t1]
/// and values > 0.
double log_slope(const std::vector<double>& t, const std::vector<double>& values,
                 double t0, double t1);

}  // namespace homctl
