#pragma once

// SO(3) / so(3) geometry in exponential coordinates.
//
// All functions are templated on the Eigen expression they receive, so they
// accept fixed-size vectors, maps and blocks of larger matrices alike, and
// return plain fixed-size objects of the same scalar type.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "homctl/types.hpp"

namespace homctl {

namespace detail {

// Below this angle the trigonometric coefficient functions switch to their
// Taylor expansions (through phi^8). Above it the closed forms lose less than
// ~5e-12 relative accuracy.
inline constexpr double kSeriesAngle = 1e-2;
// The derivative coefficients cancel harder (terms ~ phi^-4), so they switch
// later.
inline constexpr double kDerivativeSeriesAngle = 0.2;
// Distance below 2*pi where the inverse Jacobian is considered singular.
inline constexpr double kJacobianSingularMargin = 1e-6;

template <typename Scalar>
Scalar horner(Scalar x, Scalar c0, Scalar c1, Scalar c2, Scalar c3, Scalar c4) {
  return c0 + x * (c1 + x * (c2 + x * (c3 + x * c4)));
}

// sin(phi) / phi
template <typename Scalar>
Scalar sinc(Scalar phi) {
  using std::sin;
  if (phi < Scalar(kSeriesAngle)) {
    return horner<Scalar>(phi * phi, 1, Scalar(-1) / 6, Scalar(1) / 120,
                          Scalar(-1) / 5040, Scalar(1) / 362880);
  }
  return sin(phi) / phi;
}

// (1 - cos(phi)) / phi^2
template <typename Scalar>
Scalar alpha(Scalar phi) {
  using std::cos;
  if (phi < Scalar(kSeriesAngle)) {
    return horner<Scalar>(phi * phi, Scalar(1) / 2, Scalar(-1) / 24,
                          Scalar(1) / 720, Scalar(-1) / 40320,
                          Scalar(1) / 3628800);
  }
  return (1 - cos(phi)) / (phi * phi);
}

// (phi - sin(phi)) / phi^3
template <typename Scalar>
Scalar beta(Scalar phi) {
  using std::sin;
  if (phi < Scalar(kSeriesAngle)) {
    return horner<Scalar>(phi * phi, Scalar(1) / 6, Scalar(-1) / 120,
                          Scalar(1) / 5040, Scalar(-1) / 362880,
                          Scalar(1) / 39916800);
  }
  return (phi - sin(phi)) / (phi * phi * phi);
}

// 1/phi^2 - (1 + cos(phi)) / (2 phi sin(phi)), the V^2 coefficient of the
// inverse left Jacobian.
template <typename Scalar>
Scalar eta(Scalar phi) {
  using std::cos;
  using std::sin;
  if (phi < Scalar(kSeriesAngle)) {
    return horner<Scalar>(phi * phi, Scalar(1) / 12, Scalar(1) / 720,
                          Scalar(1) / 30240, Scalar(1) / 1209600,
                          Scalar(1) / 47900160);
  }
  return 1 / (phi * phi) - (1 + cos(phi)) / (2 * phi * sin(phi));
}

// alpha'(phi) / phi
template <typename Scalar>
Scalar alpha_rate(Scalar phi) {
  using std::cos;
  using std::sin;
  if (phi < Scalar(kDerivativeSeriesAngle)) {
    return horner<Scalar>(phi * phi, Scalar(-1) / 12, Scalar(1) / 180,
                          Scalar(-1) / 6720, Scalar(1) / 453600,
                          Scalar(-1) / 47900160);
  }
  const Scalar p2 = phi * phi;
  return (phi * sin(phi) - 2 * (1 - cos(phi))) / (p2 * p2);
}

// beta'(phi) / phi
template <typename Scalar>
Scalar beta_rate(Scalar phi) {
  using std::cos;
  using std::sin;
  if (phi < Scalar(kDerivativeSeriesAngle)) {
    return horner<Scalar>(phi * phi, Scalar(-1) / 60, Scalar(1) / 1260,
                          Scalar(-1) / 60480, Scalar(1) / 4989600,
                          Scalar(-1) / 622702080);
  }
  const Scalar p2 = phi * phi;
  return ((1 - cos(phi)) * phi - 3 * (phi - sin(phi))) / (p2 * p2 * phi);
}

// eta'(phi) / phi
template <typename Scalar>
Scalar eta_rate(Scalar phi) {
  using std::sin;
  using std::tan;
  if (phi < Scalar(kDerivativeSeriesAngle)) {
    return horner<Scalar>(phi * phi, Scalar(1) / 360, Scalar(1) / 7560,
                          Scalar(1) / 201600, Scalar(1) / 5987520,
                          Scalar(691) / Scalar(130767436800.0));
  }
  const Scalar p2 = phi * phi;
  const Scalar half_sin = sin(phi / 2);
  return -2 / (p2 * p2) + 1 / (2 * p2 * phi * tan(phi / 2)) +
         1 / (4 * p2 * half_sin * half_sin);
}

template <typename Scalar>
void require_nonsingular_jacobian(Scalar phi) {
  if (phi >= 2 * std::numbers::pi_v<Scalar> - Scalar(kJacobianSingularMargin)) {
    throw std::domain_error(
        "inverse left Jacobian is singular for rotation angles near 2*pi");
  }
}

}  // namespace detail

template <typename Derived>
Matrix3<typename Derived::Scalar> hat(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using Scalar = typename Derived::Scalar;
  Matrix3<Scalar> m;
  m << Scalar(0), -v(2), v(1),
       v(2), Scalar(0), -v(0),
       -v(1), v(0), Scalar(0);
  return m;
}

/// Inverse of hat(). Throws std::invalid_argument if the input deviates from
/// skew symmetry by more than 1e-9 in any entry.
template <typename Derived>
Vector3<typename Derived::Scalar> vee(const Eigen::MatrixBase<Derived>& m) {
  EIGEN_STATIC_ASSERT_MATRIX_SPECIFIC_SIZE(Derived, 3, 3);
  using Scalar = typename Derived::Scalar;
  using std::abs;
  if ((m + m.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-9)) {
    throw std::invalid_argument("vee: matrix is not skew-symmetric");
  }
  return Vector3<Scalar>((m(2, 1) - m(1, 2)) / 2, (m(0, 2) - m(2, 0)) / 2,
                         (m(1, 0) - m(0, 1)) / 2);
}

/// Rodrigues' formula.
template <typename Derived>
Matrix3<typename Derived::Scalar> exp_so3(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using Scalar = typename Derived::Scalar;
  const Scalar phi = v.norm();
  const Matrix3<Scalar> V = hat(v);
  return Matrix3<Scalar>::Identity() + detail::sinc(phi) * V +
         detail::alpha(phi) * V * V;
}

/// Principal logarithm, ||result|| <= pi.
///
/// For angles within 1e-2 of pi the axis is taken from the symmetric part of
/// R, with its sign fixed by the skew part. When the skew part vanishes
/// (trace(R) = -1) the axis is oriented so its first nonzero component is
/// positive.
template <typename Derived>
Vector3<typename Derived::Scalar> log_so3(const Eigen::MatrixBase<Derived>& R) {
  EIGEN_STATIC_ASSERT_MATRIX_SPECIFIC_SIZE(Derived, 3, 3);
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::atan2;
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;

  const Scalar c = std::clamp((R.trace() - 1) / 2, Scalar(-1), Scalar(1));
  const Vector3<Scalar> w((R(2, 1) - R(1, 2)) / 2, (R(0, 2) - R(2, 0)) / 2,
                          (R(1, 0) - R(0, 1)) / 2);
  const Scalar s = w.norm();
  const Scalar phi = atan2(s, c);

  if (phi < Scalar(detail::kSeriesAngle)) return w / detail::sinc(phi);
  if (phi < pi - Scalar(detail::kSeriesAngle)) return w * (phi / s);

  // (R + R^T)/2 - cos(phi) I = (1 - cos(phi)) y y^T
  const Matrix3<Scalar> sym =
      (R + R.transpose()) / 2 - c * Matrix3<Scalar>::Identity();
  Eigen::Index k = 0;
  sym.colwise().norm().maxCoeff(&k);
  Vector3<Scalar> y = sym.col(k).normalized();

  const Scalar projection = y.dot(w);
  if (abs(projection) > Scalar(1e-14)) {
    if (projection < 0) y = -y;
  } else {
    for (int i = 0; i < 3; ++i) {
      if (abs(y(i)) > Scalar(1e-12)) {
        if (y(i) < 0) y = -y;
        break;
      }
    }
  }
  return phi * y;
}

/// J_l(v) = sum_n V^n / (n+1)!
template <typename Derived>
Matrix3<typename Derived::Scalar> left_jacobian(
    const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using Scalar = typename Derived::Scalar;
  const Scalar phi = v.norm();
  const Matrix3<Scalar> V = hat(v);
  return Matrix3<Scalar>::Identity() + detail::alpha(phi) * V +
         detail::beta(phi) * V * V;
}

/// J_l(v)^{-1} = I - V/2 + eta(|v|) V^2. Throws std::domain_error for
/// |v| >= 2*pi - 1e-6.
template <typename Derived>
Matrix3<typename Derived::Scalar> inv_left_jacobian(
    const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using Scalar = typename Derived::Scalar;
  const Scalar phi = v.norm();
  detail::require_nonsingular_jacobian(phi);
  const Matrix3<Scalar> V = hat(v);
  return Matrix3<Scalar>::Identity() - V / 2 + detail::eta(phi) * V * V;
}

/// Directional derivative of left_jacobian at v along vdot.
template <typename DerivedV, typename DerivedW>
Matrix3<typename DerivedV::Scalar> d_left_jacobian(
    const Eigen::MatrixBase<DerivedV>& v,
    const Eigen::MatrixBase<DerivedW>& vdot) {
  using Scalar = typename DerivedV::Scalar;
  const Scalar phi = v.norm();
  const Scalar radial = v.dot(vdot);
  const Matrix3<Scalar> V = hat(v);
  const Matrix3<Scalar> W = hat(vdot);
  return detail::alpha_rate(phi) * radial * V + detail::alpha(phi) * W +
         detail::beta_rate(phi) * radial * V * V +
         detail::beta(phi) * (W * V + V * W);
}

/// Directional derivative of inv_left_jacobian at v along vdot, i.e.
/// d/dt J_l^{-1}(v(t)) when v' = vdot.
template <typename DerivedV, typename DerivedW>
Matrix3<typename DerivedV::Scalar> d_inv_left_jacobian(
    const Eigen::MatrixBase<DerivedV>& v,
    const Eigen::MatrixBase<DerivedW>& vdot) {
  using Scalar = typename DerivedV::Scalar;
  const Scalar phi = v.norm();
  detail::require_nonsingular_jacobian(phi);
  const Scalar radial = v.dot(vdot);
  const Matrix3<Scalar> V = hat(v);
  const Matrix3<Scalar> W = hat(vdot);
  return -W / 2 + detail::eta_rate(phi) * radial * V * V +
         detail::eta(phi) * (W * V + V * W);
}

namespace detail {

// J_r(v) = J_l(-v)
template <typename Derived>
Matrix3<typename Derived::Scalar> right_jacobian(
    const Eigen::MatrixBase<Derived>& v) {
  return left_jacobian((-v).eval());
}

template <typename Derived>
Matrix3<typename Derived::Scalar> inv_right_jacobian(
    const Eigen::MatrixBase<Derived>& v) {
  return inv_left_jacobian((-v).eval());
}

}  // namespace detail

/// ||R hat(v) R^T - hat(R v)||_F
template <typename DerivedR, typename DerivedV>
typename DerivedR::Scalar rotate_hat_identity_residual(
    const Eigen::MatrixBase<DerivedR>& R, const Eigen::MatrixBase<DerivedV>& v) {
  return (R * hat(v) * R.transpose() - hat((R * v).eval())).norm();
}

template <typename Derived>
bool is_rotation(const Eigen::MatrixBase<Derived>& R,
                 typename Derived::Scalar tol = 1e-9) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  if (R.rows() != 3 || R.cols() != 3) return false;
  return (R * R.transpose() - Matrix3<Scalar>::Identity()).norm() <= tol &&
         abs(R.determinant() - 1) <= tol;
}

/// Nearest rotation in the Frobenius sense (polar factor).
template <typename Derived>
Matrix3<typename Derived::Scalar> project_to_so3(
    const Eigen::MatrixBase<Derived>& R) {
  using Scalar = typename Derived::Scalar;
  Eigen::JacobiSVD<Matrix3<Scalar>> svd(R, Eigen::ComputeFullU |
                                               Eigen::ComputeFullV);
  Matrix3<Scalar> U = svd.matrixU();
  const Matrix3<Scalar> V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0) U.col(2) = -U.col(2);
  return U * V.transpose();
}

}  // namespace homctl
