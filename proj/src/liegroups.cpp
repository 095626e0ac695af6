#include "eqf/liegroups.hpp"

#include <algorithm>
#include <cmath>

#include "eqf/errors.hpp"

namespace eqf {

Mat3 skew(const Vec3& w) {
  Mat3 W;
  W << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return W;
}

Vec3 vee(const Mat3& W) { return Vec3(W(2, 1), W(0, 2), W(1, 0)); }

bool is_rotation(const Mat3& R, double tol) {
  return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

Rotation so3_exp(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 W = skew(w);
  if (theta < 1e-8) return Mat3::Identity() + W + 0.5 * W * W;
  const double s = std::sin(theta) / theta;
  const double c = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + s * W + c * W * W;
}

Vec3 so3_log(const Rotation& R) {
  const double cos_theta = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const Vec3 asym = 0.5 * vee(R - R.transpose());  // sin(theta) * axis
  // acos loses half the digits near pi; atan2 does not.
  const double theta = std::atan2(asym.norm(), cos_theta);
  if (theta < 1e-8) return asym * (1.0 + theta * theta / 6.0);
  if (theta < 3.0) return asym * (theta / std::sin(theta));

  // Near pi the antisymmetric part vanishes; read the axis from the symmetric part.
  const Mat3 axis_outer =
      (0.5 * (R + R.transpose()) - cos_theta * Mat3::Identity()) / (1.0 - cos_theta);
  int k = 0;
  axis_outer.diagonal().maxCoeff(&k);
  Vec3 axis = axis_outer.col(k) / std::sqrt(std::max(axis_outer(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(asym) < 0.0) axis = -axis;
  return theta * axis;
}

Mat3 so3_left_jacobian(const Vec3& theta) {
  const double t = theta.norm();
  const Mat3 W = skew(theta);
  if (t < 1e-6) return Mat3::Identity() + 0.5 * W + W * W / 6.0;
  const double t2 = t * t;
  return Mat3::Identity() + ((1.0 - std::cos(t)) / t2) * W + ((t - std::sin(t)) / (t2 * t)) * W * W;
}

Mat3 so3_left_jacobian_inv(const Vec3& theta) {
  const double t = theta.norm();
  const Mat3 W = skew(theta);
  if (t < 1e-6) return Mat3::Identity() - 0.5 * W + W * W / 12.0;
  const double coeff = 1.0 / (t * t) - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
  return Mat3::Identity() - 0.5 * W + coeff * W * W;
}

Mat3 so3_second_integral(const Vec3& theta) {
  const double t = theta.norm();
  const Mat3 W = skew(theta);
  if (t < 1e-4) return 0.5 * Mat3::Identity() + W / 6.0 + W * W / 24.0 + W * W * W / 120.0;
  const double t2 = t * t;
  return 0.5 * Mat3::Identity() + ((t - std::sin(t)) / (t2 * t)) * W +
         ((t2 + 2.0 * std::cos(t) - 2.0) / (2.0 * t2 * t2)) * W * W;
}

// ---------------------------------------------------------------------------
// SE_2(3)

Se23Element Se23Element::operator*(const Se23Element& o) const {
  return {R * o.R, R * o.a + a, R * o.b + b};
}

Se23Element Se23Element::inverse() const {
  const Mat3 Rt = R.transpose();
  return {Rt, -Rt * a, -Rt * b};
}

Eigen::Matrix<double, 5, 5> Se23Element::matrix() const {
  Eigen::Matrix<double, 5, 5> M = Eigen::Matrix<double, 5, 5>::Identity();
  M.topLeftCorner<3, 3>() = R;
  M.block<3, 1>(0, 3) = a;
  M.block<3, 1>(0, 4) = b;
  return M;
}

Se23Element se23_exp(const Vec9& u) {
  const Vec3 w = u.head<3>();
  const Mat3 J = so3_left_jacobian(w);
  return {so3_exp(w), J * u.segment<3>(3), J * u.segment<3>(6)};
}

Vec9 se23_log(const Se23Element& E) {
  const Vec3 w = so3_log(E.R);
  if (w.norm() >= kLogDomainLimit) throw Error(ErrorKind::ChartDomain, "SE2(3) log at rotation angle near pi");
  const Mat3 Jinv = so3_left_jacobian_inv(w);
  Vec9 u;
  u << w, Jinv * E.a, Jinv * E.b;
  return u;
}

// ---------------------------------------------------------------------------
// SE_k(3)

Sek3Element Sek3Element::identity(int k) { return {Rotation::Identity(), Mat3X::Zero(3, k)}; }

Sek3Element Sek3Element::operator*(const Sek3Element& o) const {
  if (o.k() != k()) throw Error(ErrorKind::DimensionMismatch, "SE_k(3) compose with different k");
  Sek3Element out;
  out.R = R * o.R;
  out.cols = R * o.cols + cols;
  return out;
}

Sek3Element Sek3Element::inverse() const {
  Sek3Element out;
  out.R = R.transpose();
  out.cols = -out.R * cols;
  return out;
}

Eigen::MatrixXd Sek3Element::matrix() const {
  const int n = 3 + k();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
  M.topLeftCorner<3, 3>() = R;
  M.topRightCorner(3, k()) = cols;
  return M;
}

Mat6 adjoint_se3(const Rotation& R, const Vec3& t) {
  Mat6 A = Mat6::Zero();
  A.topLeftCorner<3, 3>() = R;
  A.bottomLeftCorner<3, 3>() = skew(t) * R;
  A.bottomRightCorner<3, 3>() = R;
  return A;
}

// ---------------------------------------------------------------------------
// Semi-direct bias groups

SemiDirectBiasElement SemiDirectBiasElement::identity(int m) {
  return {Se23Element::identity(), Vec6::Zero(), Eigen::VectorXd::Zero(3 * m)};
}

SemiDirectBiasElement sdb_compose(const SemiDirectBiasElement& X1, const SemiDirectBiasElement& X2) {
  if (X1.p.size() != X2.p.size()) throw Error(ErrorKind::DimensionMismatch, "semi-direct bias compose");
  return {X1.C * X2.C, X1.gamma + adjoint_se3(X1.C.R, X1.C.a) * X2.gamma, X1.p + X2.p};
}

SemiDirectBiasElement sdb_inverse(const SemiDirectBiasElement& X) {
  const Se23Element Ci = X.C.inverse();
  return {Ci, -adjoint_se3(Ci.R, Ci.a) * X.gamma, -X.p};
}

IsdBiasElement IsdBiasElement::identity(int m) { return {Sek3Element::identity(2 + m), Vec6::Zero()}; }

IsdBiasElement isdb_compose(const IsdBiasElement& X1, const IsdBiasElement& X2) {
  if (X1.B.k() != X2.B.k()) throw Error(ErrorKind::DimensionMismatch, "invariant semi-direct bias compose");
  return {X1.B * X2.B, X1.gamma + adjoint_se3(X1.B.R, X1.B.cols.col(0)) * X2.gamma};
}

IsdBiasElement isdb_inverse(const IsdBiasElement& X) {
  const Sek3Element Bi = X.B.inverse();
  return {Bi, -adjoint_se3(Bi.R, Bi.cols.col(0)) * X.gamma};
}

}  // namespace eqf
