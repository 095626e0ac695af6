#pragma once

#include <span>

#include "eqf/arrow.hpp"
#include "eqf/charts.hpp"

namespace eqf {

using Mat12 = Eigen::Matrix<double, 12, 12>;

struct ContinuousJacobians {
  ArrowMatrix F;
  Eigen::MatrixXd G;  // (15+3m) x 12, noise order (n_w, n_a, n_ww, n_wa)
};

/// diag(sigma_w^2 I, sigma_a^2 I, sigma_ww^2 I, sigma_wa^2 I).
Mat12 process_noise_density(const NoiseSpec& noise);

/// True for the variants whose landmark error rows react to the IMU error (RI-EKF, ISD-EqF, T-EqF).
bool variant_has_landmark_coupling(Variant variant);

ContinuousJacobians continuous_F_G(Variant variant, const VinsState& hat, const Vec3& gyro, const Vec3& accel);

/// Phi and Q over one IMU interval. Without landmark coupling Q lives entirely in its
/// 15x15 core (q_core); with coupling the full matrix is kept in q_full.
struct StructuredPhiQ {
  ArrowMatrix phi;
  Mat15 q_core = Mat15::Zero();
  Eigen::MatrixXd q_full;

  int m() const { return phi.m(); }
  bool coupled() const { return q_full.size() > 0; }
  Eigen::MatrixXd q_dense() const;
};

StructuredPhiQ discrete_step(Variant variant, const VinsState& hat, const ImuSample& imu, double dt,
                             const NoiseSpec& noise, int substeps = 4);

/// Running product Phi(t_k, t_0) and accumulated Q, kept in structured form.
class PhiQAccumulator {
 public:
  explicit PhiQAccumulator(int m);
  void push(const StructuredPhiQ& step);
  const StructuredPhiQ& result() const { return acc_; }

 private:
  StructuredPhiQ acc_;
};

StructuredPhiQ accumulate(std::span<const StructuredPhiQ> steps);

struct DensePhiQ {
  Eigen::MatrixXd phi;
  Eigen::MatrixXd q;
};

/// Dense-path accumulation: full (15+3m)^2 products per step.
class DensePhiQAccumulator {
 public:
  explicit DensePhiQAccumulator(int n);
  void push(const StructuredPhiQ& step);
  const DensePhiQ& result() const { return acc_; }

 private:
  DensePhiQ acc_;
};

DensePhiQ accumulate_dense(std::span<const StructuredPhiQ> steps);

/// Stacked 2x(15+3m) measurement Jacobians for the given landmark indices.
Eigen::MatrixXd measurement_H(Variant variant, const VinsState& hat, std::span<const int> indices,
                              const CameraModel& cam);

}  // namespace eqf
