#pragma once

// Homogeneous state-feedback design for the block double integrator
//   x' = A x + B u,  A = [0 I; 0 0],  B = [0; I],
// and the resulting feedback u(x) = K0 x + ||x||_d^{1+mu} K d(-ln||x||_d) x.

#include <optional>
#include <stdexcept>
#include <string>

#include "homctl/homnorm.hpp"
#include "homctl/types.hpp"

namespace homctl {

class SynthesisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PlantMatrices {
  MatrixXd A;
  MatrixXd B;
  int n = 0;  ///< block dimension; the state has 2n entries

  static PlantMatrices double_integrator(int n);

  /// Smallest k with rank [B, AB, ..., A^{k-1}B] = dim(x); 0 if uncontrollable.
  int controllability_index() const;
  bool is_block_double_integrator() const;
  /// Throws SynthesisError unless the matrices have the block
  /// double-integrator structure and are controllable.
  void validate() const;
};

struct HomogeneousGenerator {
  MatrixXd G0;
  MatrixXd Y0;
};

/// Solves A G0 - G0 A + B Y0 = A, G0 B = 0 as one linear system in
/// (G0, Y0). Throws SynthesisError if the system is rank deficient.
HomogeneousGenerator solve_g0_y0(const PlantMatrices& plant);

/// G_d = I + mu G0, checked to be anti-Hurwitz. mu must lie in (-1, mu_max].
MatrixXd make_generator(const MatrixXd& G0, double mu, double mu_max = 0.5);

/// Immutable controller data. P must equal X^{-1} for synthesized sets; sets
/// loaded from external sources are accepted as given and checked by
/// validate_design().
class GainSet {
 public:
  GainSet(double mu, double rho, MatrixXd generator, MatrixXd weight,
          MatrixXd K0, MatrixXd K, MatrixXd X, MatrixXd Y, MatrixXd G0 = {},
          MatrixXd Y0 = {});

  double mu() const { return mu_; }
  double rho() const { return rho_; }
  const MatrixXd& generator() const { return dilation_.generator(); }
  const MatrixXd& weight() const { return dilation_.weight(); }
  const MatrixXd& K0() const { return K0_; }
  const MatrixXd& K() const { return K_; }
  const MatrixXd& X() const { return X_; }
  const MatrixXd& Y() const { return Y_; }
  /// Empty when the set was built without its (G0, Y0) pair.
  const MatrixXd& G0() const { return G0_; }
  const MatrixXd& Y0() const { return Y0_; }
  const DilationSpec<double>& dilation() const { return dilation_; }
  int state_dim() const { return static_cast<int>(dilation_.dim()); }
  int input_dim() const { return static_cast<int>(K_.rows()); }

 private:
  double mu_;
  double rho_;
  DilationSpec<double> dilation_;
  MatrixXd K0_, K_, X_, Y_, G0_, Y0_;
};

/// Free parameters of the closed-form solution X = [a b; b c] (x) I_n.
struct DesignParameters {
  std::optional<double> a;
  std::optional<double> c;
};

/// Closed-form solution of
///   A0 X + X A0^T + B Y + Y^T B^T + rho (G_d X + X G_d^T) = 0,
///   X > 0, G_d X + X G_d^T > 0
/// for the block double integrator, with b = -rho g1 a, y1 = -c - rho(g1+g2)b,
/// y2 = -rho g2 c. Default a = 1 and c = twice the binding positivity bound.
GainSet synthesize(const PlantMatrices& plant, double mu, double rho,
                   const DesignParameters& params = {});

struct DesignReport {
  double g0_equation_residual = 0;   ///< ||A G0 - G0 A + B Y0 - A||_F
  double g0_constraint_residual = 0; ///< ||G0 B||_F
  double commutation_residual = 0;   ///< ||A0 G_d - (G_d + mu I) A0|| + ||G_d B - B||
  double algebraic_residual = 0;     ///< Lyapunov-type equation residual / ||X||_F
  double min_eig_X = 0;
  double min_eig_GX = 0;             ///< of G_d X + X G_d^T
  double gain_mismatch = 0;          ///< ||K - Y X^{-1}||_F
  double weight_mismatch = 0;        ///< ||P - X^{-1}||_F / ||X^{-1}||_F
  MatrixXd K_from_XY;

  bool ok(double tol = 1e-10) const {
    return g0_equation_residual < tol && g0_constraint_residual < tol &&
           commutation_residual < tol && algebraic_residual < tol &&
           min_eig_X > 0 && min_eig_GX > 0;
  }
};

DesignReport validate_design(const GainSet& candidate, const PlantMatrices& plant);

/// u(x) = K0 x + ||x||_d^{1+mu} K d(-ln ||x||_d) x, with u(0) = K0 * 0 = 0.
VectorXd u_hom(const GainSet& gains, const Eigen::Ref<const VectorXd>& x);

/// Gains printed in the reference simulation (mu = -0.5, rho = 10), loaded
/// verbatim: X = 1e-2 [0.29 -4.31; -4.31 132.08] (x) I3,
/// Y = [-0.2432 -13.2083] (x) I3, K = [-459.6206 -25] (x) I3.
GainSet reference_gains();

}  // namespace homctl
