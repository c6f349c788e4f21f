#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "homctl/synthesis.hpp"

using homctl::GainSet;
using homctl::PlantMatrices;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = normal(rng);
  return x;
}

MatrixXd block_diag(double top, double bottom, int n) {
  MatrixXd m = MatrixXd::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n).diagonal().setConstant(top);
  m.bottomRightCorner(n, n).diagonal().setConstant(bottom);
  return m;
}

VectorXd closed_loop(const PlantMatrices& plant, const GainSet& gains, const VectorXd& x) {
  return plant.A * x + plant.B * homctl::u_hom(gains, x);
}

VectorXd rk4_step(const PlantMatrices& plant, const GainSet& gains, const VectorXd& x,
                  double h) {
  const VectorXd k1 = closed_loop(plant, gains, x);
  const VectorXd k2 = closed_loop(plant, gains, x + h / 2 * k1);
  const VectorXd k3 = closed_loop(plant, gains, x + h / 2 * k2);
  const VectorXd k4 = closed_loop(plant, gains, x + h * k3);
  return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("plant structure") {
  const PlantMatrices plant = PlantMatrices::double_integrator(3);
  CHECK(plant.A.rows() == 6);
  CHECK(plant.B.cols() == 3);
  CHECK(plant.is_block_double_integrator());
  CHECK(plant.controllability_index() == 2);
  CHECK_NOTHROW(plant.validate());

  PlantMatrices bad = plant;
  bad.A(0, 0) = 1.0;
  CHECK_FALSE(bad.is_block_double_integrator());
  CHECK_THROWS_AS(bad.validate(), homctl::SynthesisError);

  PlantMatrices uncontrollable = plant;
  uncontrollable.A.setZero();
  CHECK(uncontrollable.controllability_index() == 0);

  CHECK_THROWS_AS(PlantMatrices::double_integrator(0), homctl::SynthesisError);
}

TEST_CASE("solve_g0_y0") {
  for (int n : {1, 2, 3}) {
    const PlantMatrices plant = PlantMatrices::double_integrator(n);
    const auto gen = homctl::solve_g0_y0(plant);
    CHECK((gen.G0 - block_diag(-1, 0, n)).norm() < 1e-12);
    CHECK(gen.Y0.norm() < 1e-12);
    CHECK((plant.A * gen.G0 - gen.G0 * plant.A + plant.B * gen.Y0 - plant.A).norm() < 1e-12);
    CHECK((gen.G0 * plant.B).norm() < 1e-12);
    const MatrixXd K0 = gen.Y0 * (gen.G0 - MatrixXd::Identity(2 * n, 2 * n)).inverse();
    CHECK(K0.norm() < 1e-12);
  }

  // With A = 0 the first column of G0 is unconstrained.
  PlantMatrices degenerate;
  degenerate.n = 1;
  degenerate.A = MatrixXd::Zero(2, 2);
  degenerate.B = MatrixXd::Zero(2, 1);
  degenerate.B(1, 0) = 1.0;
  CHECK_THROWS_AS(homctl::solve_g0_y0(degenerate), homctl::SynthesisError);
}

TEST_CASE("make_generator") {
  const MatrixXd G0 = block_diag(-1, 0, 3);
  CHECK((homctl::make_generator(G0, -0.5) - block_diag(1.5, 1, 3)).norm() == 0.0);
  CHECK(homctl::make_generator(G0, 0.0) == MatrixXd::Identity(6, 6));
  const MatrixXd G = homctl::make_generator(G0, 0.5);
  CHECK((G - block_diag(0.5, 1, 3)).norm() == 0.0);
  Eigen::EigenSolver<MatrixXd> eig(G);
  CHECK(eig.eigenvalues().real().minCoeff() == doctest::Approx(0.5));

  CHECK_THROWS_AS(homctl::make_generator(G0, -1.0), homctl::SynthesisError);
  CHECK_THROWS_AS(homctl::make_generator(G0, 0.6), homctl::SynthesisError);
  CHECK_THROWS_AS(homctl::make_generator(G0, -1.5), homctl::SynthesisError);
}

TEST_CASE("closed-form synthesis with the reference free parameters") {
  const PlantMatrices plant = PlantMatrices::double_integrator(3);
  const double a = 0.0029, c = 1.3208, rho = 10, g1 = 1.5, g2 = 1;
  const GainSet gains = homctl::synthesize(plant, -0.5, rho, {a, c});

  const double b = gains.X()(0, 3);
  CHECK(b == doctest::Approx(-0.0435).epsilon(1e-12));
  CHECK(gains.Y()(0, 3) == doctest::Approx(-13.208).epsilon(1e-12));
  CHECK(gains.Y()(0, 0) == doctest::Approx(-0.2333).epsilon(1e-12));

  // Hand-inverted 2x2 block: K = [y1 y2] [c -b; -b a] / (ac - b^2).
  const double y1 = -c - rho * (g1 + g2) * b, y2 = -rho * g2 * c;
  const double det = a * c - b * b;
  const double k1 = (y1 * c - y2 * b) / det;
  const double k2 = (-y1 * b + y2 * a) / det;
  CHECK(gains.K()(0, 0) == doctest::Approx(k1).epsilon(1e-12));
  CHECK(gains.K()(0, 3) == doctest::Approx(k2).epsilon(1e-12));
  // With b = -rho g1 a these reduce to K = [-c/a, -rho (g1 + g2)].
  CHECK(k1 == doctest::Approx(-c / a).epsilon(1e-12));
  CHECK(k2 == doctest::Approx(-rho * (g1 + g2)).epsilon(1e-12));

  for (int i = 0; i < 3; ++i) {
    CHECK(gains.K()(i, i) == gains.K()(0, 0));
    CHECK(gains.K()(i, i + 3) == gains.K()(0, 3));
  }
  CHECK(gains.K()(0, 1) == 0.0);
  CHECK(gains.K0().norm() == 0.0);

  const auto report = homctl::validate_design(gains, plant);
  CHECK(report.ok(1e-10));
  CHECK(report.algebraic_residual < 1e-12);
  CHECK(report.commutation_residual < 1e-12);
  CHECK(report.gain_mismatch < 1e-9 * gains.K().norm());
  CHECK(report.weight_mismatch < 1e-12);
}

TEST_CASE("closed-form synthesis, exponential case") {
  const PlantMatrices plant = PlantMatrices::double_integrator(3);
  const GainSet gains = homctl::synthesize(plant, 0.0, 1.0, {1.0, 4.0});
  CHECK(gains.X()(0, 3) == doctest::Approx(-1.0));
  CHECK(gains.Y()(0, 0) == doctest::Approx(-2.0));
  CHECK(gains.Y()(0, 3) == doctest::Approx(-4.0));
  CHECK(gains.X()(0, 0) * gains.X()(3, 3) - gains.X()(0, 3) * gains.X()(0, 3) ==
        doctest::Approx(3.0));
  const auto report = homctl::validate_design(gains, plant);
  CHECK(report.min_eig_X > 0);
  CHECK(report.ok());
}

TEST_CASE("default free parameters") {
  const PlantMatrices plant = PlantMatrices::double_integrator(3);
  const GainSet gains = homctl::synthesize(plant, -0.5, 10.0);
  // a = 1, b = -15, binding bound c > 2.5^2 * 225 / 6 = 234.375.
  CHECK(gains.X()(0, 0) == 1.0);
  CHECK(gains.X()(0, 3) == doctest::Approx(-15.0));
  CHECK(gains.X()(3, 3) == doctest::Approx(468.75));
  CHECK(homctl::validate_design(gains, plant).ok());
}

TEST_CASE("synthesis grid satisfies every design invariant") {
  for (int n : {1, 3}) {
    const PlantMatrices plant = PlantMatrices::double_integrator(n);
    for (double mu : {-0.9, -0.5, -0.1, 0.0, 0.25, 0.5}) {
      for (double rho : {0.5, 1.0, 10.0}) {
        const GainSet gains = homctl::synthesize(plant, mu, rho);
        const auto report = homctl::validate_design(gains, plant);
        CHECK(report.ok(1e-10));
        CHECK(report.commutation_residual < 1e-12);
        const MatrixXd form = gains.weight() * gains.generator() +
                              gains.generator().transpose() * gains.weight();
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(form);
        CHECK(eig.eigenvalues().minCoeff() > 0);
      }
    }
  }
}

TEST_CASE("synthesis rejects infeasible parameters") {
  const PlantMatrices plant = PlantMatrices::double_integrator(3);
  CHECK_THROWS_AS(homctl::synthesize(plant, -1.0, 1.0), homctl::SynthesisError);
  CHECK_THROWS_AS(homctl::synthesize(plant, 0.75, 1.0), homctl::SynthesisError);
  CHECK_THROWS_AS(homctl::synthesize(plant, 0.0, 0.0), homctl::SynthesisError);
  CHECK_THROWS_AS(homctl::synthesize(plant, 0.0, 1.0, {-1.0, 4.0}), homctl::SynthesisError);
  CHECK_THROWS_AS(homctl::synthesize(plant, 0.0, 1.0, {1.0, -4.0}), homctl::SynthesisError);

  try {
    homctl::synthesize(plant, 0.0, 1.0, {1.0, 0.5});
    FAIL("expected failure");
  } catch (const homctl::SynthesisError& e) {
    CHECK(std::string(e.what()).find("X not positive definite") != std::string::npos);
  }
  // mu = -0.5, rho = 1, a = 1: a c > 2.25 holds but c > 2.34375 does not.
  try {
    homctl::synthesize(plant, -0.5, 1.0, {1.0, 2.3});
    FAIL("expected failure");
  } catch (const homctl::SynthesisError& e) {
    CHECK(std::string(e.what()).find("G_d X + X G_d^T") != std::string::npos);
  }

  PlantMatrices other = plant;
  other.A(1, 1) = 2.0;
  CHECK_THROWS_AS(homctl::synthesize(other, 0.0, 1.0), homctl::SynthesisError);
}

TEST_CASE("printed reference gains") {
  const PlantMatrices plant = PlantMatrices::double_integrator(3);
  const GainSet ref = homctl::reference_gains();
  const auto report = homctl::validate_design(ref, plant);
  CHECK(report.algebraic_residual < 2e-2);
  CHECK(report.min_eig_X > 0);
  CHECK(report.min_eig_GX > 0);
  CHECK(report.g0_equation_residual < 1e-12);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(report.K_from_XY(i, i) / ref.K()(i, i) - 1) < 5e-2);
    CHECK(std::abs(report.K_from_XY(i, i + 3) / ref.K()(i, i + 3) - 1) < 5e-2);
  }
  CHECK(ref.K()(0, 0) == -459.6206);
  CHECK(ref.generator()(0, 0) == 1.5);
  // y2 = -rho c within the printed rounding.
  CHECK(ref.Y()(0, 3) == doctest::Approx(-10 * 1.3208).epsilon(1e-4));
}

TEST_CASE("gain set shape checks") {
  const GainSet g = homctl::synthesize(PlantMatrices::double_integrator(1), 0.0, 1.0);
  CHECK_THROWS_AS(GainSet(0.0, 1.0, g.generator(), g.weight(), g.K0(), MatrixXd::Zero(1, 3),
                          g.X(), g.Y()),
                  homctl::SynthesisError);
  CHECK_THROWS_AS(GainSet(-1.0, 1.0, g.generator(), g.weight(), g.K0(), g.K(), g.X(), g.Y()),
                  homctl::SynthesisError);
  CHECK_THROWS_AS(GainSet(0.0, -1.0, g.generator(), g.weight(), g.K0(), g.K(), g.X(), g.Y()),
                  homctl::SynthesisError);
  CHECK(g.state_dim() == 2);
  CHECK(g.input_dim() == 1);
}

TEST_CASE("homogeneous feedback") {
  const PlantMatrices plant = PlantMatrices::double_integrator(3);
  const GainSet gains = homctl::synthesize(plant, -0.5, 10.0, {0.0029, 1.3208});
  CHECK(homctl::u_hom(gains, VectorXd::Zero(6)).isZero(0.0));

  std::mt19937_64 rng(31);
  for (int i = 0; i < 50; ++i) {
    VectorXd xi = random_vector(rng, 6);
    xi /= std::sqrt(xi.dot(gains.weight() * xi));
    CHECK((homctl::u_hom(gains, xi) - gains.K() * xi).norm() < 1e-10 * (gains.K() * xi).norm());
  }

  std::uniform_real_distribution<double> uniform_s(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const VectorXd xi = random_vector(rng, 6);
    const double s = uniform_s(rng);
    const VectorXd lhs = homctl::u_hom(gains, gains.dilation().apply(s, xi));
    const VectorXd rhs = std::exp((1 + gains.mu()) * s) * homctl::u_hom(gains, xi);
    REQUIRE((lhs - rhs).norm() <= 1e-9 * rhs.norm());
  }

  // Vanishes continuously at zero for mu > -1.
  const VectorXd xi = random_vector(rng, 6);
  const double initial = homctl::u_hom(gains, xi).norm();
  double previous = initial;
  for (int k = 1; k <= 12; ++k) {
    const double now = homctl::u_hom(gains, (xi * std::pow(10.0, -k)).eval()).norm();
    CHECK(now < previous);
    previous = now;
  }
  CHECK(previous < 1e-3 * initial);
}

TEST_CASE("closed loop is homogeneous of degree mu") {
  const PlantMatrices plant = PlantMatrices::double_integrator(3);
  for (double mu : {-0.5, 0.0, 0.5}) {
    const GainSet gains = homctl::synthesize(plant, mu, 10.0);
    auto field = [&](const VectorXd& x) -> VectorXd { return closed_loop(plant, gains, x); };
    CHECK(homctl::check_homogeneity<double>(gains.dilation(), field, mu, 2000) < 1e-8);
  }
}

TEST_CASE("Lyapunov derivative identity") {
  const PlantMatrices plant = PlantMatrices::double_integrator(3);
  std::mt19937_64 rng(32);
  for (double mu : {-0.5, 0.0, 0.5}) {
    const GainSet gains = homctl::synthesize(plant, mu, 2.0);
    // Pointwise: grad ||x||_d . f(x) = -rho ||x||_d^{1+mu}.
    for (int i = 0; i < 200; ++i) {
      const VectorXd x = random_vector(rng, 6, std::pow(10.0, i % 5 - 2));
      const double r = homctl::hom_norm(gains.dilation(), x);
      const double rate = homctl::hom_norm_gradient(gains.dilation(), x).dot(
          closed_loop(plant, gains, x));
      REQUIRE(rate == doctest::Approx(-gains.rho() * std::pow(r, 1 + mu)).epsilon(1e-8));
    }

    // Along an RK4 trajectory: finite differences of ||x(t)||_d.
    VectorXd x = random_vector(rng, 6);
    const double dt = 1e-3;
    std::vector<double> norms{homctl::hom_norm(gains.dilation(), x)};
    for (int k = 0; k < 1500 && norms.back() > 1e-3; ++k) {
      x = rk4_step(plant, gains, x, dt);
      norms.push_back(homctl::hom_norm(gains.dilation(), x));
    }
    std::vector<double> errors;
    for (std::size_t k = 1; k + 1 < norms.size(); ++k) {
      const double fd = (norms[k + 1] - norms[k - 1]) / (2 * dt);
      const double expected = -gains.rho() * std::pow(norms[k], 1 + mu);
      errors.push_back(std::abs(fd - expected) / std::abs(expected));
    }
    REQUIRE(errors.size() > 100);
    CHECK(median(errors) < 1e-2);
  }
}
