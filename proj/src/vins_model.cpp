#include "eqf/vins_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eqf/errors.hpp"

namespace eqf {

VinsState VinsState::origin(int m) {
  VinsState x;
  x.f.assign(m, Vec3::Zero());
  return x;
}

VinsState VinsState::imu_part() const {
  VinsState x;
  x.R = R;
  x.v = v;
  x.p = p;
  x.bw = bw;
  x.ba = ba;
  return x;
}

VinsState flow(const VinsState& x, const Vec3& gyro, const Vec3& accel, double s) {
  const Vec3 w = (gyro - x.bw) * s;
  const Vec3 a = accel - x.ba;
  const Vec3 g = gravity();
  VinsState out = x;
  out.R = x.R * so3_exp(w);
  out.v = x.v + x.R * (s * so3_left_jacobian(w) * a) + g * s;
  out.p = x.p + x.v * s + x.R * (s * s * so3_second_integral(w) * a) + 0.5 * g * s * s;
  return out;
}

VinsState propagate_mean(const VinsState& x, const ImuSample& imu, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::NonMonotonicTime, "non-positive propagation interval");
  return flow(x, imu.gyro, imu.accel, dt);
}

VinsState propagate_mean(const VinsState& x, std::span<const ImuSample> window, double t_end) {
  VinsState out = x;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (i + 1 < window.size() && window[i + 1].t < window[i].t)
      throw Error(ErrorKind::NonMonotonicTime, "IMU window out of order at sample " + std::to_string(i));
    if (window[i].t >= t_end) break;
    const double t1 = i + 1 < window.size() ? std::min(window[i + 1].t, t_end) : t_end;
    const double dt = t1 - window[i].t;
    if (dt > 0.0) out = flow(out, window[i].gyro, window[i].accel, dt);
  }
  return out;
}

VinsState action_sd(const SemiDirectBiasElement& X, const VinsState& x) {
  if (X.m() != x.m()) throw Error(ErrorKind::DimensionMismatch, "action_sd landmark count");
  const Se23Element A{x.R, x.v, x.p};
  const Se23Element AC = A * X.C;
  Vec6 b;
  b << x.bw, x.ba;
  const Se23Element Ci = X.C.inverse();
  const Vec6 nb = adjoint_se3(Ci.R, Ci.a) * (b - X.gamma);
  VinsState out;
  out.R = AC.R;
  out.v = AC.a;
  out.p = AC.b;
  out.bw = nb.head<3>();
  out.ba = nb.tail<3>();
  out.f.resize(x.m());
  for (int i = 0; i < x.m(); ++i) out.f[i] = x.f[i] + X.p.segment<3>(3 * i);
  return out;
}

VinsState action_isd(const IsdBiasElement& X, const VinsState& x) {
  if (X.m() != x.m()) throw Error(ErrorKind::DimensionMismatch, "action_isd landmark count");
  Sek3Element D = Sek3Element::identity(2 + x.m());
  D.R = x.R;
  D.cols.col(0) = x.v;
  D.cols.col(1) = x.p;
  for (int i = 0; i < x.m(); ++i) D.cols.col(2 + i) = x.f[i];
  const Sek3Element DB = D * X.B;
  const Sek3Element Bi = X.B.inverse();
  Vec6 b;
  b << x.bw, x.ba;
  const Vec6 nb = adjoint_se3(Bi.R, Bi.cols.col(0)) * (b - X.gamma);
  VinsState out;
  out.R = DB.R;
  out.v = DB.cols.col(0);
  out.p = DB.cols.col(1);
  out.bw = nb.head<3>();
  out.ba = nb.tail<3>();
  out.f.resize(x.m());
  for (int i = 0; i < x.m(); ++i) out.f[i] = DB.cols.col(2 + i);
  return out;
}

Vec3 camera_point(const VinsState& x, int i, const CameraModel& cam) {
  return cam.R_ci * (x.R.transpose() * (x.f[i] - x.p)) + cam.t_ci;
}

Vec2 project(const Vec3& pc, const CameraModel& cam) {
  return {cam.fx * pc.x() / pc.z() + cam.cx, cam.fy * pc.y() / pc.z() + cam.cy};
}

Vec2 measure(const VinsState& x, int i, const CameraModel& cam) {
  const Vec3 pc = camera_point(x, i, cam);
  if (pc.z() <= kMinDepth) throw Error(ErrorKind::BehindCamera, "landmark " + std::to_string(i) + " depth " + std::to_string(pc.z()));
  return project(pc, cam);
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& pc, const CameraModel& cam) {
  const double iz = 1.0 / pc.z();
  Eigen::Matrix<double, 2, 3> J;
  J << cam.fx * iz, 0.0, -cam.fx * pc.x() * iz * iz,
       0.0, cam.fy * iz, -cam.fy * pc.y() * iz * iz;
  return J;
}

}  // namespace eqf
