#pragma once

#include <span>
#include <vector>

#include "eqf/transforms.hpp"

namespace eqf {

struct UnobservableBasis {
  Eigen::MatrixXd N;  // (15+3m) x 4: three global translations, then global yaw
  bool state_independent = false;
};

/// Closed-form unobservable directions of `variant` at the estimate.
UnobservableBasis analytic_basis(Variant variant, const VinsState& hat);

/// Stacked H_k Phi(t_k, t_0) over the given frames. `states` holds the linearization point at
/// every IMU sample time (landmarks included, one more entry than `imu`), and `frames` are indices
/// into it. Every landmark must be in front of the camera at every frame (BehindCamera otherwise).
Eigen::MatrixXd build_stack(Variant variant, std::span<const VinsState> states, std::span<const ImuSample> imu,
                            std::span<const std::size_t> frames, const CameraModel& cam);

/// Orthonormal right singular vectors with singular value below tol * sigma_max.
Eigen::MatrixXd nullspace(const Eigen::MatrixXd& M, double tol = 1e-8);

/// Numerical rank with the same relative tolerance.
int numerical_rank(const Eigen::MatrixXd& M, double tol = 1e-8);

/// Largest principal angle between span(A) and span(B), in radians; pi/2 when the dimensions differ.
double max_principal_angle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// N* = T N.
Eigen::MatrixXd transform_basis(const Eigen::MatrixXd& T, const Eigen::MatrixXd& N);
Eigen::MatrixXd transform_basis(const ArrowMatrix& T, const Eigen::MatrixXd& N);

struct IndependenceReport {
  bool independent = false;
  double angle = 0.0;
  bool bitwise_equal = false;
};

/// Compares the analytic bases at two estimates with the same landmark count.
IndependenceReport state_independence_report(Variant variant, const VinsState& a, const VinsState& b);

}  // namespace eqf
