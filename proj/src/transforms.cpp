#include "eqf/transforms.hpp"

#include "eqf/errors.hpp"

namespace eqf {

namespace {

using namespace layout;

// Rows of the position-like states pick up [x_hat]x R_hat against the ESKF rotation error.
void fill_rotation_column(Mat15& core, const VinsState& hat) {
  core.block<3, 3>(kTheta, kTheta) = hat.R;
  core.block<3, 3>(kVel, kTheta) = skew(hat.v) * hat.R;
  core.block<3, 3>(kPos, kTheta) = skew(hat.p) * hat.R;
}

void fill_twisted_bias(Mat15& core, const VinsState& hat) {
  core.block<6, 6>(kGyroBias, kGyroBias) = adjoint_se3(hat.R, hat.v);
}

void fill_landmark_rotation(ArrowMatrix& T, const VinsState& hat) {
  for (int i = 0; i < hat.m(); ++i) T.coupling[i].block<3, 3>(0, kTheta) = skew(hat.f[i]) * hat.R;
}

// ISD-EqF and T-EqF share the same error-state to first order.
Variant hub_class(Variant v) { return v == Variant::TEqf ? Variant::IsdEqf : v; }

}  // namespace

TransformMatrix transform_from_eskf(Variant to, const VinsState& hat) {
  ArrowMatrix T = ArrowMatrix::identity(hat.m());
  switch (to) {
    case Variant::Eskf:
      break;
    case Variant::SdEqf:
      fill_rotation_column(T.core, hat);
      fill_twisted_bias(T.core, hat);
      break;
    case Variant::RiEkf:
      fill_rotation_column(T.core, hat);
      fill_landmark_rotation(T, hat);
      break;
    case Variant::LiEkf: {
      const Mat3 Rt = hat.R.transpose();
      T.core.block<3, 3>(kVel, kVel) = Rt;
      T.core.block<3, 3>(kPos, kPos) = Rt;
      for (auto& d : T.diag) d = Rt;
      break;
    }
    case Variant::IsdEqf:
    case Variant::TEqf:
      fill_rotation_column(T.core, hat);
      fill_twisted_bias(T.core, hat);
      fill_landmark_rotation(T, hat);
      break;
  }
  return T;
}

TransformMatrix transform_to_eskf(Variant from, const VinsState& hat) {
  // Block back-substitution of transform_from_eskf; every hub is unit lower triangular
  // apart from the rotation, bias and LI-EKF scaling blocks, whose inverses are explicit.
  ArrowMatrix T = ArrowMatrix::identity(hat.m());
  const Mat3 Rt = hat.R.transpose();
  auto rotation_column = [&] {
    T.core.block<3, 3>(kTheta, kTheta) = Rt;
    T.core.block<3, 3>(kVel, kTheta) = -skew(hat.v);
    T.core.block<3, 3>(kPos, kTheta) = -skew(hat.p);
  };
  auto twisted_bias = [&] { T.core.block<6, 6>(kGyroBias, kGyroBias) = adjoint_se3(Rt, -Rt * hat.v); };
  auto landmark_rotation = [&] {
    for (int i = 0; i < hat.m(); ++i) T.coupling[i].block<3, 3>(0, kTheta) = -skew(hat.f[i]);
  };
  switch (from) {
    case Variant::Eskf:
      break;
    case Variant::SdEqf:
      rotation_column();
      twisted_bias();
      break;
    case Variant::RiEkf:
      rotation_column();
      landmark_rotation();
      break;
    case Variant::LiEkf:
      T.core.block<3, 3>(kVel, kVel) = hat.R;
      T.core.block<3, 3>(kPos, kPos) = hat.R;
      for (auto& d : T.diag) d = hat.R;
      break;
    case Variant::IsdEqf:
    case Variant::TEqf:
      rotation_column();
      twisted_bias();
      landmark_rotation();
      break;
  }
  return T;
}

TransformMatrix transform_closed_form(Variant from, Variant to, const VinsState& hat) {
  if (hub_class(from) == hub_class(to)) return ArrowMatrix::identity(hat.m());
  if (from == Variant::Eskf) return transform_from_eskf(to, hat);
  if (to == Variant::Eskf) return transform_to_eskf(from, hat);
  const bool sd_to_invariant = hub_class(to) == Variant::IsdEqf;
  if (from == Variant::SdEqf && sd_to_invariant) {
    ArrowMatrix T = ArrowMatrix::identity(hat.m());
    for (int i = 0; i < hat.m(); ++i) T.coupling[i].block<3, 3>(0, kTheta) = skew(hat.f[i]);
    return T;
  }
  if (hub_class(from) == Variant::IsdEqf && to == Variant::SdEqf) {
    ArrowMatrix T = ArrowMatrix::identity(hat.m());
    for (int i = 0; i < hat.m(); ++i) T.coupling[i].block<3, 3>(0, kTheta) = -skew(hat.f[i]);
    return T;
  }
  return transform_from_eskf(to, hat) * transform_to_eskf(from, hat);
}

Eigen::MatrixXd transform_numeric(Variant from, Variant to, const VinsState& hat, double h) {
  const int n = hat.dim();
  Eigen::MatrixXd T(n, n);
  ErrorState e = ErrorState::Zero(n);
  for (int j = 0; j < n; ++j) {
    e[j] = h;
    const ErrorState plus = chart_forward(to, hat, chart_inverse(from, hat, e));
    e[j] = -h;
    const ErrorState minus = chart_forward(to, hat, chart_inverse(from, hat, e));
    e[j] = 0.0;
    T.col(j) = (plus - minus) / (2.0 * h);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(T);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) throw Error(ErrorKind::NumericalFailure, "finite-difference transformation is singular");
  return T;
}

TransformMatrix transform_rate(Variant from, Variant to, const VinsState& hat, const Vec3& gyro, const Vec3& accel,
                               double step) {
  const TransformMatrix ahead = transform_closed_form(from, to, flow(hat, gyro, accel, step));
  const TransformMatrix behind = transform_closed_form(from, to, flow(hat, gyro, accel, -step));
  return (ahead - behind) * (0.5 / step);
}

TransformedJacobians transform_jacobians(const Eigen::MatrixXd& T, const Eigen::MatrixXd& Tdot, const Eigen::MatrixXd& F,
                                      const Eigen::MatrixXd& G, const Eigen::MatrixXd& H) {
  const auto n = T.rows();
  if (T.cols() != n || Tdot.rows() != n || Tdot.cols() != n || F.rows() != n || F.cols() != n || G.rows() != n ||
      (H.size() > 0 && H.cols() != n))
    throw Error(ErrorKind::DimensionMismatch, "jacobian transformation operands");
  const Eigen::MatrixXd Tinv = T.partialPivLu().inverse();
  TransformedJacobians out;
  out.F = Tdot * Tinv + T * F * Tinv;
  out.G = T * G;
  out.H = H.size() > 0 ? Eigen::MatrixXd(H * Tinv) : H;
  return out;
}

ArrowMatrix transform_F(const ArrowMatrix& T, const ArrowMatrix& Tdot, const ArrowMatrix& F) {
  const ArrowMatrix Tinv = T.inverse();
  return Tdot * Tinv + T * F * Tinv;
}

}  // namespace eqf
