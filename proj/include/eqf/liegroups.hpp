#pragma once

#include <Eigen/Dense>

namespace eqf {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Orthonormal 3x3 matrix with det +1; stored as a plain matrix.
using Rotation = Mat3;

Mat3 skew(const Vec3& w);
Vec3 vee(const Mat3& W);
bool is_rotation(const Mat3& R, double tol = 1e-12);

Rotation so3_exp(const Vec3& w);
Vec3 so3_log(const Rotation& R);
Mat3 so3_left_jacobian(const Vec3& theta);
Mat3 so3_left_jacobian_inv(const Vec3& theta);
/// Series sum_n [theta]x^n / (n+2)!, i.e. the double time-integral of exp([theta]x s).
Mat3 so3_second_integral(const Vec3& theta);

/// Angle beyond which logarithms are refused (branch cut guard).
inline constexpr double kLogDomainLimit = 3.141592653589793 - 1e-6;

struct Se23Element {
  Rotation R = Rotation::Identity();
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();

  static Se23Element identity() { return {}; }
  Se23Element operator*(const Se23Element& o) const;
  Se23Element inverse() const;
  Eigen::Matrix<double, 5, 5> matrix() const;
};

Se23Element se23_exp(const Vec9& u);
Vec9 se23_log(const Se23Element& E);

/// Rotation plus k translation-like columns; the group SE_k(3).
struct Sek3Element {
  Rotation R = Rotation::Identity();
  Mat3X cols;

  static Sek3Element identity(int k);
  int k() const { return static_cast<int>(cols.cols()); }
  Sek3Element operator*(const Sek3Element& o) const;
  Sek3Element inverse() const;
  Eigen::MatrixXd matrix() const;
};

/// Adjoint of SE(3) in (rotation; translation) coordinates.
Mat6 adjoint_se3(const Rotation& R, const Vec3& t);

struct SemiDirectBiasElement {
  Se23Element C;
  Vec6 gamma = Vec6::Zero();
  Eigen::VectorXd p;

  static SemiDirectBiasElement identity(int m);
  int m() const { return static_cast<int>(p.size() / 3); }
};

SemiDirectBiasElement sdb_compose(const SemiDirectBiasElement& X1, const SemiDirectBiasElement& X2);
SemiDirectBiasElement sdb_inverse(const SemiDirectBiasElement& X);

struct IsdBiasElement {
  Sek3Element B;
  Vec6 gamma = Vec6::Zero();

  static IsdBiasElement identity(int m);
  int m() const { return B.k() - 2; }
};

IsdBiasElement isdb_compose(const IsdBiasElement& X1, const IsdBiasElement& X2);
IsdBiasElement isdb_inverse(const IsdBiasElement& X);

}  // namespace eqf
