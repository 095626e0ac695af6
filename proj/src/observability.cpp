#include "eqf/observability.hpp"

#include <cmath>
#include <numbers>

#include "eqf/errors.hpp"
#include "eqf/jacobians.hpp"

namespace eqf {

namespace {

using namespace layout;

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& A) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  int r = 0;
  while (r < s.size() && s[r] > 1e-12 * s[0]) ++r;
  return svd.matrixU().leftCols(r);
}

}  // namespace

UnobservableBasis analytic_basis(Variant variant, const VinsState& hat) {
  const int m = hat.m();
  UnobservableBasis out;
  out.N = Eigen::MatrixXd::Zero(hat.dim(), 4);
  const Vec3 g = gravity();
  const Mat3 I = Mat3::Identity();
  auto& N = out.N;
  switch (variant) {
    case Variant::Eskf:
      N.block<3, 3>(kPos, 0) = I;
      N.block<3, 1>(kTheta, 3) = -hat.R.transpose() * g;
      N.block<3, 1>(kVel, 3) = skew(hat.v) * g;
      N.block<3, 1>(kPos, 3) = skew(hat.p) * g;
      for (int i = 0; i < m; ++i) {
        N.block<3, 3>(landmark(i), 0) = I;
        N.block<3, 1>(landmark(i), 3) = skew(hat.f[i]) * g;
      }
      break;
    case Variant::SdEqf:
      N.block<3, 3>(kPos, 0) = I;
      N.block<3, 1>(kTheta, 3) = -g;
      for (int i = 0; i < m; ++i) {
        N.block<3, 3>(landmark(i), 0) = I;
        N.block<3, 1>(landmark(i), 3) = skew(hat.f[i]) * g;
      }
      break;
    case Variant::LiEkf: {
      const Mat3 Rt = hat.R.transpose();
      N.block<3, 3>(kPos, 0) = Rt;
      N.block<3, 1>(kTheta, 3) = -Rt * g;
      N.block<3, 1>(kVel, 3) = Rt * skew(hat.v) * g;
      N.block<3, 1>(kPos, 3) = Rt * skew(hat.p) * g;
      for (int i = 0; i < m; ++i) {
        N.block<3, 3>(landmark(i), 0) = Rt;
        N.block<3, 1>(landmark(i), 3) = Rt * skew(hat.f[i]) * g;
      }
      break;
    }
    case Variant::RiEkf:
    case Variant::IsdEqf:
    case Variant::TEqf:
      N.block<3, 3>(kPos, 0) = I;
      N.block<3, 1>(kTheta, 3) = -g;
      for (int i = 0; i < m; ++i) N.block<3, 3>(landmark(i), 0) = I;
      out.state_independent = true;
      break;
  }
  return out;
}

Eigen::MatrixXd build_stack(Variant variant, std::span<const VinsState> states, std::span<const ImuSample> imu,
                            std::span<const std::size_t> frames, const CameraModel& cam) {
  if (states.size() != imu.size() + 1) throw Error(ErrorKind::DimensionMismatch, "stack needs one state per IMU sample plus the end");
  if (imu.size() < 2) throw Error(ErrorKind::DimensionMismatch, "stack needs at least two IMU samples");
  const int m = states.front().m();
  const int n = state_dim(m);
  std::vector<int> all(m);
  for (int i = 0; i < m; ++i) all[i] = i;
  const NoiseSpec quiet{0, 0, 0, 0, 0};

  Eigen::MatrixXd M(2 * m * static_cast<int>(frames.size()), n);
  PhiQAccumulator acc(m);
  std::size_t k = 0;
  int row = 0;
  for (std::size_t frame : frames) {
    if (frame >= states.size() || frame < k) throw Error(ErrorKind::DimensionMismatch, "frame indices must be increasing and in range");
    for (; k < frame; ++k) {
      // The last sample has no successor; it spans the same interval as its predecessor.
      const double dt = k + 1 < imu.size() ? imu[k + 1].t - imu[k].t : imu[k].t - imu[k - 1].t;
      acc.push(discrete_step(variant, states[k], imu[k], dt, quiet, 4));
    }
    const VinsState& x = states[frame];
    if (x.m() != m) throw Error(ErrorKind::DimensionMismatch, "landmark count changes along the trajectory");
    for (int i = 0; i < m; ++i)
      if (camera_point(x, i, cam).z() <= kMinDepth) throw Error(ErrorKind::BehindCamera, "landmark behind camera in stack");
    const Eigen::MatrixXd H = measurement_H(variant, x, all, cam);
    M.middleRows(row, 2 * m) = H * acc.result().phi.dense();
    row += 2 * m;
  }
  return M;
}

Eigen::MatrixXd nullspace(const Eigen::MatrixXd& M, double tol) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = tol * (s.size() > 0 ? s[0] : 0.0);
  int r = 0;
  while (r < s.size() && s[r] > cut) ++r;
  return svd.matrixV().rightCols(M.cols() - r);
}

int numerical_rank(const Eigen::MatrixXd& M, double tol) {
  return static_cast<int>(M.cols() - nullspace(M, tol).cols());
}

double max_principal_angle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != B.rows()) throw Error(ErrorKind::DimensionMismatch, "subspaces live in different spaces");
  const Eigen::MatrixXd Qa = orthonormal_columns(A);
  const Eigen::MatrixXd Qb = orthonormal_columns(B);
  if (Qa.cols() != Qb.cols()) return 0.5 * std::numbers::pi;
  if (Qa.cols() == 0) return 0.0;
  // The sine form keeps full relative precision for tiny angles, unlike acos of the cosines.
  const Eigen::MatrixXd residual = Qb - Qa * (Qa.transpose() * Qb);
  const double s = Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues()[0];
  return std::asin(std::min(1.0, s));
}

Eigen::MatrixXd transform_basis(const Eigen::MatrixXd& T, const Eigen::MatrixXd& N) {
  if (T.cols() != N.rows() || T.rows() != T.cols()) throw Error(ErrorKind::DimensionMismatch, "transform_basis operands");
  return T * N;
}

Eigen::MatrixXd transform_basis(const ArrowMatrix& T, const Eigen::MatrixXd& N) {
  if (T.dim() != N.rows()) throw Error(ErrorKind::DimensionMismatch, "transform_basis operands");
  return T.apply_left(N);
}

IndependenceReport state_independence_report(Variant variant, const VinsState& a, const VinsState& b) {
  if (a.m() != b.m()) throw Error(ErrorKind::DimensionMismatch, "states have different landmark counts");
  const Eigen::MatrixXd Na = analytic_basis(variant, a).N;
  const Eigen::MatrixXd Nb = analytic_basis(variant, b).N;
  IndependenceReport r;
  r.bitwise_equal = Na == Nb;
  r.angle = r.bitwise_equal ? 0.0 : max_principal_angle(Na, Nb);
  r.independent = r.angle < 1e-10;
  return r;
}

}  // namespace eqf
