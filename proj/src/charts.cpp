#include "eqf/charts.hpp"

#include <string>

#include "eqf/errors.hpp"

namespace eqf {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Eskf: return "ESKF";
    case Variant::SdEqf: return "SD_EQF";
    case Variant::RiEkf: return "RI_EKF";
    case Variant::LiEkf: return "LI_EKF";
    case Variant::IsdEqf: return "ISD_EQF";
    case Variant::TEqf: return "T_EQF";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants)
    if (variant_name(v) == name) return v;
  throw Error(ErrorKind::InvalidConfig, "unknown filter variant '" + std::string(name) + "'");
}

namespace {

using namespace layout;

Vec3 checked_log(const Rotation& R) {
  const Vec3 w = so3_log(R);
  if (w.norm() >= kLogDomainLimit) throw Error(ErrorKind::ChartDomain, "rotation error at the branch cut");
  return w;
}

Vec6 bias_of(const VinsState& x) {
  Vec6 b;
  b << x.bw, x.ba;
  return b;
}

void set_bias(VinsState& x, const Vec6& b) {
  x.bw = b.head<3>();
  x.ba = b.tail<3>();
}

// Bias error twisted by the adjoint of the estimate's (R, v); shared by SD-EqF, ISD-EqF and T-EqF.
Vec6 twisted_bias_error(const VinsState& hat, const VinsState& x) {
  return adjoint_se3(hat.R, hat.v) * (bias_of(x) - bias_of(hat));
}

Vec6 untwist_bias(const VinsState& hat, const Vec6& e) {
  const Rotation Rt = hat.R.transpose();
  return bias_of(hat) + adjoint_se3(Rt, -Rt * hat.v) * e;
}

ErrorState forward_eskf(const VinsState& hat, const VinsState& x) {
  ErrorState e(x.dim());
  e.segment<3>(kTheta) = checked_log(hat.R.transpose() * x.R);
  e.segment<3>(kVel) = x.v - hat.v;
  e.segment<3>(kPos) = x.p - hat.p;
  e.segment<3>(kGyroBias) = x.bw - hat.bw;
  e.segment<3>(kAccelBias) = x.ba - hat.ba;
  for (int i = 0; i < x.m(); ++i) e.segment<3>(landmark(i)) = x.f[i] - hat.f[i];
  return e;
}

VinsState inverse_eskf(const VinsState& hat, const ErrorState& e) {
  VinsState x = hat;
  x.R = hat.R * so3_exp(e.segment<3>(kTheta));
  x.v += e.segment<3>(kVel);
  x.p += e.segment<3>(kPos);
  x.bw += e.segment<3>(kGyroBias);
  x.ba += e.segment<3>(kAccelBias);
  for (int i = 0; i < x.m(); ++i) x.f[i] += e.segment<3>(landmark(i));
  return x;
}

ErrorState forward_sd(const VinsState& hat, const VinsState& x) {
  ErrorState e(x.dim());
  const Se23Element A{x.R, x.v, x.p};
  const Se23Element Ahat{hat.R, hat.v, hat.p};
  const Rotation dR = x.R * hat.R.transpose();
  if (so3_log(dR).norm() >= kLogDomainLimit) throw Error(ErrorKind::ChartDomain, "rotation error at the branch cut");
  e.head<9>() = se23_log(A * Ahat.inverse());
  e.segment<6>(kGyroBias) = twisted_bias_error(hat, x);
  for (int i = 0; i < x.m(); ++i) e.segment<3>(landmark(i)) = x.f[i] - hat.f[i];
  return e;
}

VinsState inverse_sd(const VinsState& hat, const ErrorState& e) {
  const Se23Element Ahat{hat.R, hat.v, hat.p};
  const Se23Element A = se23_exp(e.head<9>()) * Ahat;
  VinsState x = hat;
  x.R = A.R;
  x.v = A.a;
  x.p = A.b;
  set_bias(x, untwist_bias(hat, e.segment<6>(kGyroBias)));
  for (int i = 0; i < x.m(); ++i) x.f[i] += e.segment<3>(landmark(i));
  return x;
}

// Right-invariant SE_{2+m}(3) logarithm of D * Dhat^-1, in the fixed layout (bias slots left untouched).
void right_invariant_log(const VinsState& hat, const VinsState& x, ErrorState& e) {
  const Rotation dR = x.R * hat.R.transpose();
  const Vec3 theta = checked_log(dR);
  const Mat3 J = so3_left_jacobian_inv(theta);
  e.segment<3>(kTheta) = theta;
  e.segment<3>(kVel) = J * (x.v - dR * hat.v);
  e.segment<3>(kPos) = J * (x.p - dR * hat.p);
  for (int i = 0; i < x.m(); ++i) e.segment<3>(landmark(i)) = J * (x.f[i] - dR * hat.f[i]);
}

void right_invariant_exp(const VinsState& hat, const ErrorState& e, VinsState& x) {
  const Vec3 theta = e.segment<3>(kTheta);
  const Rotation dR = so3_exp(theta);
  const Mat3 J = so3_left_jacobian(theta);
  x.R = dR * hat.R;
  x.v = J * e.segment<3>(kVel) + dR * hat.v;
  x.p = J * e.segment<3>(kPos) + dR * hat.p;
  for (int i = 0; i < x.m(); ++i) x.f[i] = J * e.segment<3>(landmark(i)) + dR * hat.f[i];
}

ErrorState forward_ri(const VinsState& hat, const VinsState& x) {
  ErrorState e(x.dim());
  right_invariant_log(hat, x, e);
  e.segment<6>(kGyroBias) = bias_of(x) - bias_of(hat);
  return e;
}

VinsState inverse_ri(const VinsState& hat, const ErrorState& e) {
  VinsState x = hat;
  right_invariant_exp(hat, e, x);
  set_bias(x, bias_of(hat) + e.segment<6>(kGyroBias));
  return x;
}

ErrorState forward_li(const VinsState& hat, const VinsState& x) {
  ErrorState e(x.dim());
  const Rotation Rt = hat.R.transpose();
  const Vec3 theta = checked_log(Rt * x.R);
  const Mat3 J = so3_left_jacobian_inv(theta);
  e.segment<3>(kTheta) = theta;
  e.segment<3>(kVel) = J * (Rt * (x.v - hat.v));
  e.segment<3>(kPos) = J * (Rt * (x.p - hat.p));
  e.segment<6>(kGyroBias) = bias_of(x) - bias_of(hat);
  for (int i = 0; i < x.m(); ++i) e.segment<3>(landmark(i)) = J * (Rt * (x.f[i] - hat.f[i]));
  return e;
}

VinsState inverse_li(const VinsState& hat, const ErrorState& e) {
  const Vec3 theta = e.segment<3>(kTheta);
  const Mat3 RJ = hat.R * so3_left_jacobian(theta);
  VinsState x = hat;
  x.R = hat.R * so3_exp(theta);
  x.v = hat.v + RJ * e.segment<3>(kVel);
  x.p = hat.p + RJ * e.segment<3>(kPos);
  set_bias(x, bias_of(hat) + e.segment<6>(kGyroBias));
  for (int i = 0; i < x.m(); ++i) x.f[i] = hat.f[i] + RJ * e.segment<3>(landmark(i));
  return x;
}

ErrorState forward_isd(const VinsState& hat, const VinsState& x) {
  ErrorState e(x.dim());
  right_invariant_log(hat, x, e);
  e.segment<6>(kGyroBias) = twisted_bias_error(hat, x);
  return e;
}

VinsState inverse_isd(const VinsState& hat, const ErrorState& e) {
  VinsState x = hat;
  right_invariant_exp(hat, e, x);
  set_bias(x, untwist_bias(hat, e.segment<6>(kGyroBias)));
  return x;
}

// T-EqF: the SD-EqF coordinates followed by the landmark shear [f_hat]x against the rotation error.
ErrorState forward_t(const VinsState& hat, const VinsState& x) {
  ErrorState e = forward_sd(hat, x);
  const Vec3 theta = e.segment<3>(kTheta);
  for (int i = 0; i < x.m(); ++i) e.segment<3>(landmark(i)) += hat.f[i].cross(theta);
  return e;
}

VinsState inverse_t(const VinsState& hat, const ErrorState& e) {
  ErrorState sd = e;
  const Vec3 theta = e.segment<3>(kTheta);
  for (int i = 0; i < hat.m(); ++i) sd.segment<3>(landmark(i)) -= hat.f[i].cross(theta);
  return inverse_sd(hat, sd);
}

}  // namespace

ErrorState chart_forward(Variant variant, const VinsState& hat, const VinsState& x) {
  if (hat.m() != x.m()) throw Error(ErrorKind::DimensionMismatch, "chart_forward landmark count");
  switch (variant) {
    case Variant::Eskf: return forward_eskf(hat, x);
    case Variant::SdEqf: return forward_sd(hat, x);
    case Variant::RiEkf: return forward_ri(hat, x);
    case Variant::LiEkf: return forward_li(hat, x);
    case Variant::IsdEqf: return forward_isd(hat, x);
    case Variant::TEqf: return forward_t(hat, x);
  }
  throw Error(ErrorKind::InvalidConfig, "unhandled variant");
}

VinsState chart_inverse(Variant variant, const VinsState& hat, const ErrorState& eps) {
  if (eps.size() != hat.dim()) throw Error(ErrorKind::DimensionMismatch, "chart_inverse error length");
  if (eps.segment<3>(layout::kTheta).norm() >= kLogDomainLimit)
    throw Error(ErrorKind::ChartDomain, "rotation error outside the chart");
  switch (variant) {
    case Variant::Eskf: return inverse_eskf(hat, eps);
    case Variant::SdEqf: return inverse_sd(hat, eps);
    case Variant::RiEkf: return inverse_ri(hat, eps);
    case Variant::LiEkf: return inverse_li(hat, eps);
    case Variant::IsdEqf: return inverse_isd(hat, eps);
    case Variant::TEqf: return inverse_t(hat, eps);
  }
  throw Error(ErrorKind::InvalidConfig, "unhandled variant");
}

}  // namespace eqf
