#pragma once

#include <vector>

#include "eqf/liegroups.hpp"

namespace eqf {

using Mat15 = Eigen::Matrix<double, 15, 15>;
using Coupling = Eigen::Matrix<double, 3, 15>;

/// Square (15+3m) matrix with a zero upper-right block:
///
///   [ core        0            ]
///   [ coupling_i  diag_i (3x3) ]   one block row per landmark
///
/// Every transformation matrix, continuous F and discrete Phi in this library has this shape,
/// so products and inverses stay O(m) and sandwiches T P T^T are O(m^2).
class ArrowMatrix {
 public:
  enum class Structure {
    Identity,        // core = I, no coupling, diag = I
    CoreOnly,        // no coupling, diag = I
    BlockDiagonal,   // no coupling, general diag
    Coupled,         // landmark rows couple into the IMU columns
  };

  Mat15 core = Mat15::Identity();
  std::vector<Coupling> coupling;
  std::vector<Mat3> diag;

  ArrowMatrix() = default;
  static ArrowMatrix identity(int m);
  static ArrowMatrix zero(int m);
  /// Embeds a dense matrix, which must have exact zeros in the upper-right block and
  /// between different landmark blocks.
  static ArrowMatrix from_dense(const Eigen::MatrixXd& M);

  int m() const { return static_cast<int>(diag.size()); }
  int dim() const { return 15 + 3 * m(); }

  bool coupling_is_zero() const;
  bool diag_is_identity() const;
  bool diag_is_zero() const;
  Structure structure() const;

  Eigen::MatrixXd dense() const;

  ArrowMatrix operator*(const ArrowMatrix& o) const;
  ArrowMatrix operator+(const ArrowMatrix& o) const;
  ArrowMatrix operator-(const ArrowMatrix& o) const;
  ArrowMatrix operator*(double s) const;
  ArrowMatrix inverse() const;

  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;
  /// T * M.
  Eigen::MatrixXd apply_left(const Eigen::MatrixXd& M) const;
  /// M * T^T.
  Eigen::MatrixXd apply_right_transpose(const Eigen::MatrixXd& M) const;
  /// T * P * T^T for symmetric P; the result is symmetrized.
  Eigen::MatrixXd sandwich(const Eigen::MatrixXd& P) const;
  /// T * Q * T^T where Q is nonzero only on its leading 15x15 block.
  Eigen::MatrixXd sandwich_core(const Mat15& Q) const;
};

}  // namespace eqf
