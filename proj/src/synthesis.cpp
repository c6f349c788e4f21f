#include "homctl/synthesis.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include <unsupported/Eigen/KroneckerProduct>

namespace homctl {

namespace {

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

double min_symmetric_eigenvalue(const MatrixXd& m) {
  const MatrixXd sym = (m + m.transpose()) / 2;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

void require_shape(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols,
                   const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << "GainSet: " << name << " is " << m.rows() << "x" << m.cols()
        << ", expected " << rows << "x" << cols;
    throw SynthesisError(msg.str());
  }
}

}  // namespace

PlantMatrices PlantMatrices::double_integrator(int n) {
  if (n <= 0) throw SynthesisError("double_integrator: n must be positive");
  PlantMatrices plant;
  plant.n = n;
  plant.A = MatrixXd::Zero(2 * n, 2 * n);
  plant.A.topRightCorner(n, n).setIdentity();
  plant.B = MatrixXd::Zero(2 * n, n);
  plant.B.bottomRows(n).setIdentity();
  return plant;
}

int PlantMatrices::controllability_index() const {
  const Eigen::Index dim = A.rows();
  MatrixXd reach = B;
  MatrixXd power_b = B;
  for (Eigen::Index k = 1; k <= dim; ++k) {
    Eigen::FullPivLU<MatrixXd> lu(reach);
    if (lu.rank() == dim) return static_cast<int>(k);
    power_b = A * power_b;
    MatrixXd next(dim, reach.cols() + B.cols());
    next << reach, power_b;
    reach = std::move(next);
  }
  return 0;
}

bool PlantMatrices::is_block_double_integrator() const {
  if (n <= 0 || A.rows() != 2 * n || A.cols() != 2 * n || B.rows() != 2 * n ||
      B.cols() != n) {
    return false;
  }
  const PlantMatrices ref = double_integrator(n);
  return A == ref.A && B == ref.B;
}

void PlantMatrices::validate() const {
  if (!is_block_double_integrator()) {
    throw SynthesisError(
        "plant: only the block double integrator A = [0 I; 0 0], B = [0; I] is "
        "supported");
  }
  if (controllability_index() == 0) {
    throw SynthesisError("plant: (A, B) is not controllable");
  }
}

HomogeneousGenerator solve_g0_y0(const PlantMatrices& plant) {
  const Eigen::Index N = plant.A.rows();
  const Eigen::Index m = plant.B.cols();
  if (plant.A.cols() != N || plant.B.rows() != N) {
    throw SynthesisError("solve_g0_y0: inconsistent plant dimensions");
  }
  const MatrixXd I = MatrixXd::Identity(N, N);

  // Column-major vectorization: vec(A G) = (I (x) A) vec(G),
  // vec(G A) = (A^T (x) I) vec(G), vec(B Y) = (I (x) B) vec(Y),
  // vec(G B) = (B^T (x) I) vec(G).
  const Eigen::Index unknowns = N * N + m * N;
  const Eigen::Index equations = N * N + N * m;
  MatrixXd system = MatrixXd::Zero(equations, unknowns);
  system.topLeftCorner(N * N, N * N) = kron(I, plant.A) - kron(plant.A.transpose(), I);
  system.topRightCorner(N * N, m * N) = kron(I, plant.B);
  system.bottomLeftCorner(N * m, N * N) = kron(plant.B.transpose(), I);

  VectorXd rhs = VectorXd::Zero(equations);
  rhs.head(N * N) = Eigen::Map<const VectorXd>(plant.A.data(), N * N);

  Eigen::FullPivLU<MatrixXd> lu(system);
  if (lu.rank() < unknowns) {
    throw SynthesisError(
        "solve_g0_y0: singular linear system (unsupported plant structure)");
  }
  const VectorXd solution = lu.solve(rhs);

  HomogeneousGenerator out;
  out.G0 = Eigen::Map<const MatrixXd>(solution.data(), N, N);
  out.Y0 = Eigen::Map<const MatrixXd>(solution.data() + N * N, m, N);
  return out;
}

MatrixXd make_generator(const MatrixXd& G0, double mu, double mu_max) {
  if (!(mu > -1.0 && mu <= mu_max)) {
    std::ostringstream msg;
    msg << "make_generator: mu = " << mu << " outside (-1, " << mu_max << "]";
    throw SynthesisError(msg.str());
  }
  const MatrixXd G = MatrixXd::Identity(G0.rows(), G0.cols()) + mu * G0;
  Eigen::EigenSolver<MatrixXd> eig(G, false);
  if (eig.eigenvalues().real().minCoeff() <= 0) {
    throw SynthesisError("make_generator: G_d is not anti-Hurwitz");
  }
  return G;
}

GainSet::GainSet(double mu, double rho, MatrixXd generator, MatrixXd weight,
                 MatrixXd K0, MatrixXd K, MatrixXd X, MatrixXd Y, MatrixXd G0,
                 MatrixXd Y0)
    : mu_(mu),
      rho_(rho),
      dilation_(std::move(generator), std::move(weight)),
      K0_(std::move(K0)),
      K_(std::move(K)),
      X_(std::move(X)),
      Y_(std::move(Y)),
      G0_(std::move(G0)),
      Y0_(std::move(Y0)) {
  if (!(mu_ > -1.0)) throw SynthesisError("GainSet: mu must exceed -1");
  if (!(rho_ > 0.0)) throw SynthesisError("GainSet: rho must be positive");
  const Eigen::Index N = dilation_.dim();
  const Eigen::Index m = K_.rows();
  require_shape(K_, m, N, "K");
  require_shape(K0_, m, N, "K0");
  require_shape(X_, N, N, "X");
  require_shape(Y_, m, N, "Y");
  if (G0_.size() != 0) require_shape(G0_, N, N, "G0");
  if (Y0_.size() != 0) require_shape(Y0_, m, N, "Y0");
}

GainSet synthesize(const PlantMatrices& plant, double mu, double rho,
                   const DesignParameters& params) {
  plant.validate();
  if (!(rho > 0.0)) throw SynthesisError("synthesize: rho must be positive");
  const int index = plant.controllability_index();
  const HomogeneousGenerator gen = solve_g0_y0(plant);
  const MatrixXd G = make_generator(gen.G0, mu, 1.0 / index);

  const int n = plant.n;
  const double g1 = G(0, 0);
  const double g2 = G(n, n);

  const double a = params.a.value_or(1.0);
  if (!(a > 0.0)) throw SynthesisError("synthesize: a must be positive");
  const double b = -rho * g1 * a;
  // 4 g1 g2 a c > (g1 + g2)^2 b^2 is the binding bound whenever g1 != g2,
  // and implies a c > b^2.
  const double c_bound = (g1 + g2) * (g1 + g2) * b * b / (4.0 * g1 * g2 * a);
  const double c = params.c.value_or(2.0 * c_bound);
  if (!(c > 0.0)) throw SynthesisError("synthesize: c must be positive");
  if (!(a * c > b * b)) {
    std::ostringstream msg;
    msg << "synthesize: X not positive definite, need a*c > b^2 = " << b * b;
    throw SynthesisError(msg.str());
  }
  if (!(4.0 * g1 * g2 * a * c > (g1 + g2) * (g1 + g2) * b * b)) {
    std::ostringstream msg;
    msg << "synthesize: G_d X + X G_d^T not positive definite, need c > "
        << c_bound;
    throw SynthesisError(msg.str());
  }
  const double y1 = -c - rho * (g1 + g2) * b;
  const double y2 = -rho * g2 * c;

  const MatrixXd In = MatrixXd::Identity(n, n);
  MatrixXd x_block(2, 2);
  x_block << a, b, b, c;
  MatrixXd y_block(1, 2);
  y_block << y1, y2;
  MatrixXd X = kron(x_block, In);
  MatrixXd Y = kron(y_block, In);
  MatrixXd P = X.llt().solve(MatrixXd::Identity(2 * n, 2 * n));
  P = ((P + P.transpose()) / 2).eval();
  MatrixXd K = Y * P;
  const MatrixXd shift = gen.G0 - MatrixXd::Identity(2 * n, 2 * n);
  MatrixXd K0 = gen.Y0 * shift.inverse();

  return GainSet(mu, rho, G, std::move(P), std::move(K0), std::move(K),
                 std::move(X), std::move(Y), gen.G0, gen.Y0);
}

DesignReport validate_design(const GainSet& candidate, const PlantMatrices& plant) {
  const MatrixXd& A = plant.A;
  const MatrixXd& B = plant.B;
  const Eigen::Index N = A.rows();
  if (candidate.state_dim() != N || candidate.input_dim() != B.cols()) {
    throw SynthesisError("validate_design: gain set does not match plant");
  }
  const MatrixXd I = MatrixXd::Identity(N, N);

  MatrixXd G0 = candidate.G0();
  MatrixXd Y0 = candidate.Y0();
  if (G0.size() == 0 || Y0.size() == 0) {
    const HomogeneousGenerator gen = solve_g0_y0(plant);
    G0 = gen.G0;
    Y0 = gen.Y0;
  }

  DesignReport report;
  report.g0_equation_residual = (A * G0 - G0 * A + B * Y0 - A).norm();
  report.g0_constraint_residual = (G0 * B).norm();

  const MatrixXd& G = candidate.generator();
  const MatrixXd A0 = A + B * Y0 * (G0 - I).inverse();
  report.commutation_residual =
      (A0 * G - (G + candidate.mu() * I) * A0).norm() + (G * B - B).norm();

  const MatrixXd& X = candidate.X();
  const MatrixXd& Y = candidate.Y();
  const MatrixXd lhs = A0 * X + X * A0.transpose() + B * Y + Y.transpose() * B.transpose() +
                       candidate.rho() * (G * X + X * G.transpose());
  report.algebraic_residual = lhs.norm() / X.norm();
  report.min_eig_X = min_symmetric_eigenvalue(X);
  report.min_eig_GX = min_symmetric_eigenvalue(G * X + X * G.transpose());

  const MatrixXd X_inv = X.inverse();
  report.K_from_XY = Y * X_inv;
  report.gain_mismatch = (candidate.K() - report.K_from_XY).norm();
  report.weight_mismatch = (candidate.weight() - X_inv).norm() / X_inv.norm();
  return report;
}

VectorXd u_hom(const GainSet& gains, const Eigen::Ref<const VectorXd>& x) {
  VectorXd u = gains.K0() * x;
  const double r = hom_norm(gains.dilation(), x);
  if (r == 0.0) return u;
  u += std::pow(r, 1.0 + gains.mu()) * (gains.K() * gains.dilation().apply(-std::log(r), x));
  return u;
}

GainSet reference_gains() {
  constexpr int n = 3;
  const MatrixXd In = MatrixXd::Identity(n, n);
  MatrixXd x_block(2, 2);
  x_block << 0.29, -4.31, -4.31, 132.08;
  MatrixXd y_block(1, 2);
  y_block << -0.2432, -13.2083;
  MatrixXd k_block(1, 2);
  k_block << -459.6206, -25.0;

  MatrixXd X = kron(x_block * 1e-2, In);
  MatrixXd Y = kron(y_block, In);
  MatrixXd K = kron(k_block, In);
  MatrixXd G = MatrixXd::Identity(2 * n, 2 * n);
  G.topLeftCorner(n, n) *= 1.5;
  MatrixXd P = X.inverse();
  P = ((P + P.transpose()) / 2).eval();
  MatrixXd G0 = MatrixXd::Zero(2 * n, 2 * n);
  G0.topLeftCorner(n, n) = -In;
  return GainSet(-0.5, 10.0, std::move(G), std::move(P), MatrixXd::Zero(n, 2 * n),
                 std::move(K), std::move(X), std::move(Y), std::move(G0),
                 MatrixXd::Zero(n, 2 * n));
}

}  // namespace homctl
