#include "eqf/jacobians.hpp"

#include <string>

#include "eqf/errors.hpp"
#include "eqf/flops.hpp"
#include "eqf/transforms.hpp"

namespace eqf {

namespace {

using namespace layout;
using Mat15x12 = Eigen::Matrix<double, 15, 12>;

// The IMU blocks of F and G for the variants with closed forms. Landmark rows are added by the caller.
void imu_jacobians(Variant variant, const VinsState& hat, const Vec3& gyro, const Vec3& accel, Mat15& F,
                   Mat15x12& G) {
  F.setZero();
  G.setZero();
  const Mat3 I = Mat3::Identity();
  const Vec3 w = gyro - hat.bw;
  const Vec3 a = accel - hat.ba;
  const Mat3& R = hat.R;
  if (variant == Variant::Eskf) {
    F.block<3, 3>(kTheta, kTheta) = -skew(w);
    F.block<3, 3>(kTheta, kGyroBias) = -I;
    F.block<3, 3>(kVel, kTheta) = -R * skew(a);
    F.block<3, 3>(kVel, kAccelBias) = -R;
    F.block<3, 3>(kPos, kVel) = I;
    G.block<3, 3>(kTheta, 0) = -I;
    G.block<3, 3>(kVel, 3) = -R;
    G.block<3, 3>(kGyroBias, 6) = I;
    G.block<3, 3>(kAccelBias, 9) = I;
    return;
  }
  // SD-EqF core, shared by ISD-EqF and T-EqF.
  const Vec3 w_world = R * w;
  const Mat3 Wx = skew(w_world);
  F.block<3, 3>(kTheta, kGyroBias) = -I;
  F.block<3, 3>(kVel, kTheta) = skew(gravity());
  F.block<3, 3>(kVel, kAccelBias) = -I;
  F.block<3, 3>(kPos, kVel) = I;
  F.block<3, 3>(kPos, kGyroBias) = -skew(hat.p);
  F.block<3, 3>(kGyroBias, kGyroBias) = Wx;
  F.block<3, 3>(kAccelBias, kGyroBias) = skew(R * a + hat.v.cross(w_world) + gravity());
  F.block<3, 3>(kAccelBias, kAccelBias) = Wx;
  const Mat3 vR = skew(hat.v) * R;
  G.block<3, 3>(kTheta, 0) = -R;
  G.block<3, 3>(kVel, 0) = -vR;
  G.block<3, 3>(kVel, 3) = -R;
  G.block<3, 3>(kPos, 0) = -skew(hat.p) * R;
  G.block<3, 3>(kGyroBias, 6) = R;
  G.block<3, 3>(kAccelBias, 6) = vR;
  G.block<3, 3>(kAccelBias, 9) = R;
}

// F * X for a 15x15 F that is mostly zero 3x3 blocks.
Mat15 block_sparse_mul(const Mat15& F, const Mat15& X) {
  Mat15 out = Mat15::Zero();
  for (int bi = 0; bi < 5; ++bi)
    for (int bk = 0; bk < 5; ++bk) {
      const auto blk = F.block<3, 3>(3 * bi, 3 * bk);
      if ((blk.array() == 0.0).all()) continue;
      out.middleRows<3>(3 * bi).noalias() += blk * X.middleRows<3>(3 * bk);
    }
  return out;
}

bool finite(const Mat15& M) { return M.allFinite(); }

bool finite(const ArrowMatrix& A) {
  if (!A.core.allFinite()) return false;
  for (const auto& c : A.coupling)
    if (!c.allFinite()) return false;
  for (const auto& d : A.diag)
    if (!d.allFinite()) return false;
  return true;
}

// RK4 on (Phi, Q) with everything inside the 15x15 core; ESKF and SD-EqF.
StructuredPhiQ core_step(Variant variant, const VinsState& hat, const ImuSample& imu, double dt, const Mat12& Qc,
                         int substeps) {
  const double h = dt / substeps;
  auto eval = [&](double tau, Mat15& F, Mat15& GQG) {
    Mat15x12 G;
    imu_jacobians(variant, flow(hat.imu_part(), imu.gyro, imu.accel, tau), imu.gyro, imu.accel, F, G);
    GQG = G * Qc.diagonal().asDiagonal() * G.transpose();
  };
  Mat15 phi = Mat15::Identity();
  Mat15 q = Mat15::Zero();
  Mat15 F0, N0, Fm, Nm, F1, N1;
  eval(0.0, F0, N0);
  auto dphi = [](const Mat15& F, const Mat15& P) { return block_sparse_mul(F, P); };
  auto dq = [](const Mat15& F, const Mat15& Q, const Mat15& N) {
    const Mat15 FQ = block_sparse_mul(F, Q);
    return Mat15(FQ + FQ.transpose() + N);
  };
  for (int s = 0; s < substeps; ++s) {
    const double t0 = s * h;
    eval(t0 + 0.5 * h, Fm, Nm);
    eval(t0 + h, F1, N1);
    const Mat15 k1 = dphi(F0, phi);
    const Mat15 l1 = dq(F0, q, N0);
    const Mat15 k2 = dphi(Fm, phi + 0.5 * h * k1);
    const Mat15 l2 = dq(Fm, q + 0.5 * h * l1, Nm);
    const Mat15 k3 = dphi(Fm, phi + 0.5 * h * k2);
    const Mat15 l3 = dq(Fm, q + 0.5 * h * l2, Nm);
    const Mat15 k4 = dphi(F1, phi + h * k3);
    const Mat15 l4 = dq(F1, q + h * l3, N1);
    phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    q += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    F0 = F1;
    N0 = N1;
  }
  flops::add(static_cast<std::uint64_t>(substeps) * 8 * flops::gemm(15, 15, 15));
  if (!finite(phi) || !finite(q)) throw Error(ErrorKind::NonFiniteJacobian, "non-finite discrete step");
  StructuredPhiQ out;
  out.phi = ArrowMatrix::identity(hat.m());
  out.phi.core = phi;
  out.q_core = 0.5 * (q + q.transpose());
  return out;
}

// General arrow-shaped RK4; Q is dense when the landmark rows are driven by noise.
StructuredPhiQ arrow_step(Variant variant, const VinsState& hat, const ImuSample& imu, double dt, const Mat12& Qc,
                          int substeps) {
  const double h = dt / substeps;
  const bool coupled = variant_has_landmark_coupling(variant);
  const int n = hat.dim();
  struct Eval {
    ArrowMatrix F;
    Eigen::MatrixXd GQG;
  };
  auto eval = [&](double tau) {
    ContinuousJacobians cj = continuous_F_G(variant, flow(hat, imu.gyro, imu.accel, tau), imu.gyro, imu.accel);
    Eigen::MatrixXd GQG = cj.G * Qc.diagonal().asDiagonal() * cj.G.transpose();
    return Eval{std::move(cj.F), std::move(GQG)};
  };
  auto dq = [&](const Eval& e, const Eigen::MatrixXd& Q) -> Eigen::MatrixXd {
    if (!coupled) {
      const Mat15 FQ = block_sparse_mul(e.F.core, Mat15(Q));
      return FQ + FQ.transpose() + e.GQG.topLeftCorner<15, 15>();
    }
    const Eigen::MatrixXd FQ = e.F.apply_left(Q);
    return FQ + FQ.transpose() + e.GQG;
  };
  ArrowMatrix phi = ArrowMatrix::identity(hat.m());
  Eigen::MatrixXd q = coupled ? Eigen::MatrixXd::Zero(n, n) : Eigen::MatrixXd::Zero(15, 15);
  Eval e0 = eval(0.0);
  for (int s = 0; s < substeps; ++s) {
    const double t0 = s * h;
    const Eval em = eval(t0 + 0.5 * h);
    Eval e1 = eval(t0 + h);
    const ArrowMatrix k1 = e0.F * phi;
    const Eigen::MatrixXd l1 = dq(e0, q);
    const ArrowMatrix k2 = em.F * (phi + k1 * (0.5 * h));
    const Eigen::MatrixXd l2 = dq(em, q + 0.5 * h * l1);
    const ArrowMatrix k3 = em.F * (phi + k2 * (0.5 * h));
    const Eigen::MatrixXd l3 = dq(em, q + 0.5 * h * l2);
    const ArrowMatrix k4 = e1.F * (phi + k3 * h);
    const Eigen::MatrixXd l4 = dq(e1, q + h * l3);
    phi = phi + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    q += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    e0 = std::move(e1);
  }
  if (!finite(phi) || !q.allFinite()) throw Error(ErrorKind::NonFiniteJacobian, "non-finite discrete step");
  StructuredPhiQ out;
  out.phi = std::move(phi);
  if (coupled)
    out.q_full = 0.5 * (q + q.transpose());
  else
    out.q_core = 0.5 * (q + q.transpose());
  return out;
}

}  // namespace

Mat12 process_noise_density(const NoiseSpec& noise) {
  Eigen::Matrix<double, 12, 1> d;
  d << Vec3::Constant(noise.sigma_gyro * noise.sigma_gyro), Vec3::Constant(noise.sigma_accel * noise.sigma_accel),
      Vec3::Constant(noise.sigma_gyro_walk * noise.sigma_gyro_walk),
      Vec3::Constant(noise.sigma_accel_walk * noise.sigma_accel_walk);
  return d.asDiagonal();
}

bool variant_has_landmark_coupling(Variant variant) {
  return variant == Variant::RiEkf || variant == Variant::IsdEqf || variant == Variant::TEqf;
}

ContinuousJacobians continuous_F_G(Variant variant, const VinsState& hat, const Vec3& gyro, const Vec3& accel) {
  ContinuousJacobians out;
  const int m = hat.m();
  if (variant == Variant::RiEkf || variant == Variant::LiEkf) {
    // No closed forms here: transform the ESKF linearization.
    const ContinuousJacobians eskf = continuous_F_G(Variant::Eskf, hat, gyro, accel);
    const TransformMatrix T = transform_from_eskf(variant, hat);
    const TransformMatrix Tdot = transform_rate(Variant::Eskf, variant, hat, gyro, accel);
    out.F = transform_F(T, Tdot, eskf.F);
    out.G = T.apply_left(eskf.G);
    return out;
  }
  Mat15 F;
  Mat15x12 G;
  imu_jacobians(variant, hat, gyro, accel, F, G);
  out.F = ArrowMatrix::zero(m);
  out.F.core = F;
  out.G = Eigen::MatrixXd::Zero(hat.dim(), 12);
  out.G.topRows<15>() = G;
  if (variant == Variant::IsdEqf || variant == Variant::TEqf) {
    const Mat3 gyro_noise_row = G.block<3, 3>(kTheta, 0);
    for (int i = 0; i < m; ++i) {
      const Mat3 fx = skew(hat.f[i]);
      out.F.coupling[i].block<3, 3>(0, kGyroBias) = -fx;
      out.G.block<3, 3>(landmark(i), 0) = fx * gyro_noise_row;
    }
  }
  return out;
}

Eigen::MatrixXd StructuredPhiQ::q_dense() const {
  if (coupled()) return q_full;
  const int n = phi.dim();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  Q.topLeftCorner<15, 15>() = q_core;
  return Q;
}

StructuredPhiQ discrete_step(Variant variant, const VinsState& hat, const ImuSample& imu, double dt,
                             const NoiseSpec& noise, int substeps) {
  if (!(dt >= 0.0)) throw Error(ErrorKind::NonMonotonicTime, "negative discrete step");
  const Mat12 Qc = process_noise_density(noise);
  if (variant == Variant::Eskf || variant == Variant::SdEqf) return core_step(variant, hat, imu, dt, Qc, substeps);
  return arrow_step(variant, hat, imu, dt, Qc, substeps);
}

PhiQAccumulator::PhiQAccumulator(int m) { acc_.phi = ArrowMatrix::identity(m); }

void PhiQAccumulator::push(const StructuredPhiQ& step) {
  if (step.m() != acc_.m()) throw Error(ErrorKind::DimensionMismatch, "accumulating steps of different size");
  const bool core_only = !step.coupled() && !acc_.coupled() && step.phi.coupling_is_zero();
  if (core_only) {
    acc_.q_core = step.phi.core * acc_.q_core * step.phi.core.transpose() + step.q_core;
    flops::add(2 * flops::gemm(15, 15, 15));
  } else {
    const Eigen::MatrixXd q = acc_.coupled() ? acc_.q_full : acc_.q_dense();
    acc_.q_full = step.phi.sandwich(q) + step.q_dense();
  }
  if (step.phi.diag_is_identity() && step.phi.coupling_is_zero() && acc_.phi.diag_is_identity() &&
      acc_.phi.coupling_is_zero()) {
    acc_.phi.core = step.phi.core * acc_.phi.core;
    flops::add(flops::gemm(15, 15, 15));
  } else {
    acc_.phi = step.phi * acc_.phi;
  }
}

StructuredPhiQ accumulate(std::span<const StructuredPhiQ> steps) {
  if (steps.empty()) throw Error(ErrorKind::DimensionMismatch, "accumulate needs at least one step");
  PhiQAccumulator acc(steps.front().m());
  for (const auto& s : steps) acc.push(s);
  return acc.result();
}

DensePhiQAccumulator::DensePhiQAccumulator(int n) {
  acc_.phi = Eigen::MatrixXd::Identity(n, n);
  acc_.q = Eigen::MatrixXd::Zero(n, n);
}

void DensePhiQAccumulator::push(const StructuredPhiQ& step) {
  const Eigen::MatrixXd phi = step.phi.dense();
  const auto n = static_cast<std::uint64_t>(phi.rows());
  if (phi.rows() != acc_.phi.rows()) throw Error(ErrorKind::DimensionMismatch, "accumulating steps of different size");
  acc_.phi = phi * acc_.phi;
  acc_.q = phi * acc_.q * phi.transpose() + step.q_dense();
  flops::add(3 * flops::gemm(n, n, n));
}

DensePhiQ accumulate_dense(std::span<const StructuredPhiQ> steps) {
  if (steps.empty()) throw Error(ErrorKind::DimensionMismatch, "accumulate needs at least one step");
  DensePhiQAccumulator acc(steps.front().phi.dim());
  for (const auto& s : steps) acc.push(s);
  return acc.result();
}

Eigen::MatrixXd measurement_H(Variant variant, const VinsState& hat, std::span<const int> indices,
                              const CameraModel& cam) {
  const int n = hat.dim();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * static_cast<int>(indices.size()), n);
  const bool native = variant == Variant::Eskf;
  const TransformMatrix Tinv = native ? TransformMatrix() : transform_to_eskf(variant, hat);
  const Mat3 Rt = hat.R.transpose();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int i = indices[r];
    if (i < 0 || i >= hat.m()) throw Error(ErrorKind::DimensionMismatch, "landmark index " + std::to_string(i));
    const Vec3 pc = camera_point(hat, i, cam);
    if (pc.z() <= kMinDepth) throw Error(ErrorKind::BehindCamera, "landmark " + std::to_string(i));
    const Eigen::Matrix<double, 2, 3> J = projection_jacobian(pc, cam) * cam.R_ci;
    Eigen::Matrix<double, 2, 15> h_imu = Eigen::Matrix<double, 2, 15>::Zero();
    h_imu.block<2, 3>(0, kTheta) = J * skew(Rt * (hat.f[i] - hat.p));
    h_imu.block<2, 3>(0, kPos) = -J * Rt;
    const Eigen::Matrix<double, 2, 3> h_f = J * Rt;
    const int row = 2 * static_cast<int>(r);
    if (native) {
      H.block<2, 15>(row, 0) = h_imu;
      H.block<2, 3>(row, landmark(i)) = h_f;
    } else {
      H.block<2, 15>(row, 0) = h_imu * Tinv.core + h_f * Tinv.coupling[i];
      H.block<2, 3>(row, landmark(i)) = h_f * Tinv.diag[i];
    }
  }
  return H;
}

}  // namespace eqf
