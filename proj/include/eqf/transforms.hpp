#pragma once

#include "eqf/arrow.hpp"
#include "eqf/charts.hpp"

namespace eqf {

/// Transformation matrices carry their zero pattern in the arrow layout; structure() is the tag.
using TransformMatrix = ArrowMatrix;

/// Closed-form T from the ESKF error-state to `to`, evaluated at the estimate.
TransformMatrix transform_from_eskf(Variant to, const VinsState& hat);

/// Inverse of transform_from_eskf, in closed form.
TransformMatrix transform_to_eskf(Variant from, const VinsState& hat);

/// T with eps_to = T eps_from to first order, composed through the ESKF hub.
TransformMatrix transform_closed_form(Variant from, Variant to, const VinsState& hat);

/// Central-difference Jacobian of chart_forward(to) o chart_inverse(from) at eps = 0.
Eigen::MatrixXd transform_numeric(Variant from, Variant to, const VinsState& hat, double h = 1e-6);

/// Time derivative of the closed-form T along the noise-free mean flow driven by (gyro, accel).
TransformMatrix transform_rate(Variant from, Variant to, const VinsState& hat, const Vec3& gyro, const Vec3& accel,
                               double step = 1e-5);

struct TransformedJacobians {
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  Eigen::MatrixXd H;
};

/// F* = Tdot T^-1 + T F T^-1, G* = T G, H* = H T^-1 (dense; H may be empty).
TransformedJacobians transform_jacobians(const Eigen::MatrixXd& T, const Eigen::MatrixXd& Tdot, const Eigen::MatrixXd& F,
                                      const Eigen::MatrixXd& G, const Eigen::MatrixXd& H);

/// The same law on arrow-shaped operands.
ArrowMatrix transform_F(const ArrowMatrix& T, const ArrowMatrix& Tdot, const ArrowMatrix& F);

}  // namespace eqf
