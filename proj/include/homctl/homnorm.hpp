#pragma once

// Linear dilations d(s) = exp(s G) and the canonical homogeneous norm they
// induce from a weighted Euclidean norm ||x|| = sqrt(x^T P x).

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "homctl/types.hpp"

namespace homctl {

/// Generator/weight pair defining a monotone linear dilation.
///
/// Construction validates that P is symmetric positive definite, G is
/// anti-Hurwitz and P G + G^T P is positive definite; the latter makes
/// s -> ||d(s) x|| strictly increasing for every x != 0.
template <typename Scalar>
class DilationSpec {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  DilationSpec(Matrix generator, Matrix weight)
      : generator_(std::move(generator)), weight_(std::move(weight)) {
    const Eigen::Index n = generator_.rows();
    if (n == 0 || generator_.cols() != n || weight_.rows() != n ||
        weight_.cols() != n) {
      throw std::invalid_argument("DilationSpec: G and P must be n x n");
    }
    using std::abs;
    if ((weight_ - weight_.transpose()).cwiseAbs().maxCoeff() >
        Scalar(1e-12) * (Scalar(1) + weight_.cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("DilationSpec: P is not symmetric");
    }
    weight_ = ((weight_ + weight_.transpose()) / 2).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> p_eig(weight_, Eigen::EigenvaluesOnly);
    if (p_eig.eigenvalues().minCoeff() <= 0) {
      throw std::invalid_argument("DilationSpec: P is not positive definite");
    }

    Eigen::EigenSolver<Matrix> g_eig(generator_, false);
    if (g_eig.eigenvalues().real().minCoeff() <= 0) {
      throw std::invalid_argument("DilationSpec: G is not anti-Hurwitz");
    }

    const Matrix form = weight_ * generator_ + generator_.transpose() * weight_;
    Eigen::SelfAdjointEigenSolver<Matrix> f_eig(form, Eigen::EigenvaluesOnly);
    if (f_eig.eigenvalues().minCoeff() <= 0) {
      throw std::invalid_argument(
          "DilationSpec: P G + G^T P is not positive definite (non-monotone)");
    }

    // Growth-rate bounds of s -> ||d(s)x||: the extreme eigenvalues of
    // P^{-1/2} (P G + G^T P) P^{-1/2} / 2.
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> rate_eig(
        form, weight_, Eigen::EigenvaluesOnly);
    rate_min_ = rate_eig.eigenvalues().minCoeff() / 2;
    rate_max_ = rate_eig.eigenvalues().maxCoeff() / 2;

    diagonal_ = generator_.isDiagonal(Scalar(0));
    if (diagonal_) diagonal_entries_ = generator_.diagonal();
  }

  Eigen::Index dim() const { return generator_.rows(); }
  const Matrix& generator() const { return generator_; }
  const Matrix& weight() const { return weight_; }
  bool is_diagonal() const { return diagonal_; }

  /// Bounds alpha <= beta with e^{alpha s} <= ||d(s)z|| <= e^{beta s} for
  /// ||z|| = 1, s >= 0.
  std::pair<Scalar, Scalar> growth_bounds() const { return {rate_min_, rate_max_}; }

  Matrix dilation(Scalar s) const {
    if (diagonal_) {
      return (s * diagonal_entries_).array().exp().matrix().asDiagonal();
    }
    return (s * generator_).exp();
  }

  /// d(s) x without materializing d(s) when G is diagonal.
  template <typename Derived>
  Vector apply(Scalar s, const Eigen::MatrixBase<Derived>& x) const {
    if (diagonal_) {
      return ((s * diagonal_entries_).array().exp() * x.array()).matrix();
    }
    return dilation(s) * x;
  }

  template <typename Derived>
  Scalar weighted_norm(const Eigen::MatrixBase<Derived>& x) const {
    using std::sqrt;
    return sqrt(x.dot(weight_ * x));
  }

 private:
  Matrix generator_;
  Matrix weight_;
  Vector diagonal_entries_;
  Scalar rate_min_{};
  Scalar rate_max_{};
  bool diagonal_ = false;
};

/// d(s) = exp(s G)
template <typename Scalar>
MatrixX<Scalar> dilate(const DilationSpec<Scalar>& spec, Scalar s) {
  return spec.dilation(s);
}

class HomNormError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr int kHomNormMaxIterations = 200;
inline constexpr double kHomNormTolerance = 1e-12;

}  // namespace detail

/// Canonical homogeneous norm: e^{s} where ||d(-s) x|| = 1, and 0 at x = 0.
///
/// g(s) = ||d(-s)x||^2 - 1 is strictly decreasing. The root is bracketed from
/// the growth bounds of the dilation, then refined by Newton steps that fall
/// back to bisection whenever they leave the bracket.
template <typename Scalar, typename Derived>
Scalar hom_norm(const DilationSpec<Scalar>& spec,
                const Eigen::MatrixBase<Derived>& x) {
  using std::abs;
  using std::exp;
  using std::log;
  using std::max;
  using std::min;

  if (x.rows() != spec.dim()) {
    throw std::invalid_argument("hom_norm: dimension mismatch");
  }
  if (x.isZero(Scalar(0))) return Scalar(0);

  const MatrixX<Scalar>& P = spec.weight();
  const MatrixX<Scalar>& G = spec.generator();
  auto eval = [&](Scalar s, Scalar* slope) {
    const VectorX<Scalar> y = spec.apply(-s, x);
    const VectorX<Scalar> Py = P * y;
    if (slope) *slope = -2 * Py.dot(G * y);
    return y.dot(Py) - 1;
  };

  const Scalar log_norm = log(spec.weighted_norm(x));
  const auto [rate_min, rate_max] = spec.growth_bounds();
  // ||x|| <= 1: s in [ln||x||/alpha, ln||x||/beta], reversed when ||x|| > 1.
  Scalar lo = min(log_norm / rate_min, log_norm / rate_max);
  Scalar hi = max(log_norm / rate_min, log_norm / rate_max);
  const Scalar pad = Scalar(1e-9) * (Scalar(1) + abs(lo) + abs(hi));
  lo -= pad;
  hi += pad;

  // Round-off can still put the root just outside; widen by doubling.
  Scalar width = hi - lo + Scalar(1);
  int iterations = 0;
  while (eval(lo, nullptr) < 0 || eval(hi, nullptr) > 0) {
    if (++iterations > detail::kHomNormMaxIterations) {
      throw HomNormError("hom_norm: could not bracket the root (non-monotone dilation?)");
    }
    if (eval(lo, nullptr) < 0) lo -= width;
    if (eval(hi, nullptr) > 0) hi += width;
    width *= 2;
  }

  // Iterate to round-off; kHomNormTolerance is the accuracy that is guaranteed.
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Scalar s = min(max(log_norm, lo), hi);
  for (iterations = 0; iterations < detail::kHomNormMaxIterations; ++iterations) {
    Scalar slope = 0;
    const Scalar g = eval(s, &slope);
    if (g == 0) return exp(s);
    if (g > 0) {
      lo = s;
    } else {
      hi = s;
    }
    Scalar next = s - g / slope;
    if (!(next >= lo && next <= hi)) next = (lo + hi) / 2;
    const Scalar floor = 8 * eps * (Scalar(1) + abs(s));
    if (abs(next - s) <= floor || hi - lo <= floor) return exp(next);
    s = next;
  }
  throw HomNormError("hom_norm: root finder did not converge");
}

/// Gradient of the canonical homogeneous norm:
///   ||x||_d x^T d^T P d / (x^T d^T P G d x), d = d(-ln ||x||_d).
/// Throws std::invalid_argument at x = 0 where the norm is not differentiable.
template <typename Scalar, typename Derived>
VectorX<Scalar> hom_norm_gradient(const DilationSpec<Scalar>& spec,
                                  const Eigen::MatrixBase<Derived>& x) {
  using std::log;
  if (x.isZero(Scalar(0))) {
    throw std::invalid_argument("hom_norm_gradient: undefined at x = 0");
  }
  const Scalar r = hom_norm(spec, x);
  const MatrixX<Scalar> d = spec.dilation(-log(r));
  const VectorX<Scalar> y = d * x;
  const MatrixX<Scalar>& P = spec.weight();
  const Scalar denominator = y.dot(P * spec.generator() * y);
  return r * (d.transpose() * (P * y)) / denominator;
}

/// Largest relative residual ||f(d(s)x) - e^{mu s} d(s) f(x)|| / ||f(d(s)x)||
/// over random x ~ N(0, I) and s ~ U[-3, 3].
template <typename Scalar>
Scalar check_homogeneity(
    const DilationSpec<Scalar>& spec,
    const std::function<VectorX<Scalar>(const VectorX<Scalar>&)>& field,
    Scalar degree, int samples, std::uint64_t seed = 0x5eed) {
  using std::exp;
  using std::max;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-3.0, 3.0);

  Scalar worst = 0;
  for (int k = 0; k < samples; ++k) {
    VectorX<Scalar> x(spec.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = Scalar(normal(rng));
    const Scalar s = Scalar(uniform(rng));
    const MatrixX<Scalar> d = spec.dilation(s);
    const VectorX<Scalar> lhs = field(d * x);
    const VectorX<Scalar> rhs = exp(degree * s) * (d * field(x));
    const Scalar scale = lhs.norm();
    const Scalar diff = (lhs - rhs).norm();
    worst = max(worst, scale > 0 ? diff / scale : diff);
  }
  return worst;
}

}  // namespace homctl
