#include "eqf/arrow.hpp"

#include "eqf/errors.hpp"
#include "eqf/flops.hpp"
#include "eqf/kernels.hpp"

namespace eqf {

ArrowMatrix ArrowMatrix::identity(int m) {
  ArrowMatrix A;
  A.core.setIdentity();
  A.coupling.assign(m, Coupling::Zero());
  A.diag.assign(m, Mat3::Identity());
  return A;
}

ArrowMatrix ArrowMatrix::zero(int m) {
  ArrowMatrix A;
  A.core.setZero();
  A.coupling.assign(m, Coupling::Zero());
  A.diag.assign(m, Mat3::Zero());
  return A;
}

ArrowMatrix ArrowMatrix::from_dense(const Eigen::MatrixXd& M) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n || n < 15 || (n - 15) % 3 != 0)
    throw Error(ErrorKind::DimensionMismatch, "arrow matrix needs a square 15+3m matrix");
  const int m = (n - 15) / 3;
  if (n > 15 && M.topRightCorner(15, n - 15).cwiseAbs().maxCoeff() > 0.0)
    throw Error(ErrorKind::NumericalFailure, "upper-right block not exactly zero");
  ArrowMatrix A = zero(m);
  A.core = M.topLeftCorner<15, 15>();
  for (int i = 0; i < m; ++i) {
    A.coupling[i] = M.block<3, 15>(15 + 3 * i, 0);
    A.diag[i] = M.block<3, 3>(15 + 3 * i, 15 + 3 * i);
    for (int j = 0; j < m; ++j)
      if (j != i && M.block<3, 3>(15 + 3 * i, 15 + 3 * j).cwiseAbs().maxCoeff() > 0.0)
        throw Error(ErrorKind::NumericalFailure, "landmark blocks not block-diagonal");
  }
  return A;
}

bool ArrowMatrix::coupling_is_zero() const {
  for (const auto& c : coupling)
    if ((c.array() != 0.0).any()) return false;
  return true;
}

bool ArrowMatrix::diag_is_identity() const {
  for (const auto& d : diag)
    if (d != Mat3::Identity()) return false;
  return true;
}

bool ArrowMatrix::diag_is_zero() const {
  for (const auto& d : diag)
    if ((d.array() != 0.0).any()) return false;
  return true;
}

ArrowMatrix::Structure ArrowMatrix::structure() const {
  if (!coupling_is_zero()) return Structure::Coupled;
  if (!diag_is_identity()) return Structure::BlockDiagonal;
  if (core != Mat15::Identity()) return Structure::CoreOnly;
  return Structure::Identity;
}

Eigen::MatrixXd ArrowMatrix::dense() const {
  const int n = dim();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  M.topLeftCorner<15, 15>() = core;
  for (int i = 0; i < m(); ++i) {
    M.block<3, 15>(15 + 3 * i, 0) = coupling[i];
    M.block<3, 3>(15 + 3 * i, 15 + 3 * i) = diag[i];
  }
  return M;
}

ArrowMatrix ArrowMatrix::operator*(const ArrowMatrix& o) const {
  if (o.m() != m()) throw Error(ErrorKind::DimensionMismatch, "arrow product");
  ArrowMatrix out;
  out.core = core * o.core;
  out.coupling.resize(m());
  out.diag.resize(m());
  for (int i = 0; i < m(); ++i) {
    out.coupling[i] = coupling[i] * o.core + diag[i] * o.coupling[i];
    out.diag[i] = diag[i] * o.diag[i];
  }
  flops::add(flops::gemm(15, 15, 15) + m() * (flops::gemm(3, 15, 15) + flops::gemm(3, 3, 15) + flops::gemm(3, 3, 3)));
  return out;
}

ArrowMatrix ArrowMatrix::operator+(const ArrowMatrix& o) const {
  if (o.m() != m()) throw Error(ErrorKind::DimensionMismatch, "arrow sum");
  ArrowMatrix out = *this;
  out.core += o.core;
  for (int i = 0; i < m(); ++i) {
    out.coupling[i] += o.coupling[i];
    out.diag[i] += o.diag[i];
  }
  return out;
}

ArrowMatrix ArrowMatrix::operator-(const ArrowMatrix& o) const { return *this + o * -1.0; }

ArrowMatrix ArrowMatrix::operator*(double s) const {
  ArrowMatrix out = *this;
  out.core *= s;
  for (auto& c : out.coupling) c *= s;
  for (auto& d : out.diag) d *= s;
  return out;
}

ArrowMatrix ArrowMatrix::inverse() const {
  Eigen::PartialPivLU<Mat15> lu(core);
  if (!(std::abs(lu.determinant()) > 0.0)) throw Error(ErrorKind::NumericalFailure, "singular arrow core");
  ArrowMatrix out;
  out.core = lu.inverse();
  out.coupling.resize(m());
  out.diag.resize(m());
  for (int i = 0; i < m(); ++i) {
    out.diag[i] = diag[i] == Mat3::Identity() ? Mat3::Identity() : Mat3(diag[i].inverse());
    out.coupling[i] = -out.diag[i] * coupling[i] * out.core;
  }
  flops::add(flops::gemm(15, 15, 15) + m() * (flops::gemm(3, 15, 15) + flops::gemm(3, 3, 15)));
  return out;
}

Eigen::VectorXd ArrowMatrix::operator*(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw Error(ErrorKind::DimensionMismatch, "arrow times vector");
  Eigen::VectorXd y(dim());
  const Eigen::Matrix<double, 15, 1> xi = x.head<15>();
  y.head<15>() = core * xi;
  for (int i = 0; i < m(); ++i) y.segment<3>(15 + 3 * i) = coupling[i] * xi + diag[i] * x.segment<3>(15 + 3 * i);
  return y;
}

Eigen::MatrixXd ArrowMatrix::apply_right_transpose(const Eigen::MatrixXd& M) const {
  if (M.cols() != dim()) throw Error(ErrorKind::DimensionMismatch, "matrix times arrow transpose");
  const int rows = static_cast<int>(M.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, dim());
  const double* src[18];
  double coeff[18];
  std::uint64_t work = 0;

  auto emit = [&](int out_col, int count) {
    if (count == 0) return;
    kernels::combine_columns(out.col(out_col).data(), src, coeff, count, rows);
    work += 2ull * count * rows;
  };

  for (int c = 0; c < 15; ++c) {
    int count = 0;
    for (int k = 0; k < 15; ++k) {
      if (core(c, k) == 0.0) continue;
      src[count] = M.col(k).data();
      coeff[count++] = core(c, k);
    }
    emit(c, count);
  }
  for (int i = 0; i < m(); ++i) {
    const int base = 15 + 3 * i;
    for (int r = 0; r < 3; ++r) {
      int count = 0;
      for (int k = 0; k < 15; ++k) {
        if (coupling[i](r, k) == 0.0) continue;
        src[count] = M.col(k).data();
        coeff[count++] = coupling[i](r, k);
      }
      // At most 15 coupling sources plus 3 diagonal ones fit the scratch arrays.
      for (int s = 0; s < 3; ++s) {
        if (diag[i](r, s) == 0.0) continue;
        src[count] = M.col(base + s).data();
        coeff[count++] = diag[i](r, s);
      }
      emit(base + r, count);
    }
  }
  flops::add(work);
  return out;
}

Eigen::MatrixXd ArrowMatrix::apply_left(const Eigen::MatrixXd& M) const {
  return apply_right_transpose(M.transpose()).transpose();
}

Eigen::MatrixXd ArrowMatrix::sandwich(const Eigen::MatrixXd& P) const {
  if (P.rows() != dim() || P.cols() != dim()) throw Error(ErrorKind::DimensionMismatch, "arrow sandwich");
  Eigen::MatrixXd out;
  if (coupling_is_zero() && diag_is_identity()) {
    // Only the IMU rows and columns move.
    out = P;
    const int n = dim();
    out.leftCols<15>() = P.leftCols<15>() * core.transpose();
    out.topRows<15>() = core * out.topRows<15>();
    flops::add(2 * flops::gemm(n, 15, 15));
    // Symmetrize the moved part only; the landmark block is returned untouched.
    const Mat15 top = out.topLeftCorner<15, 15>();
    out.topLeftCorner<15, 15>() = 0.5 * (top + top.transpose());
    out.topRightCorner(15, n - 15) = out.bottomLeftCorner(n - 15, 15).transpose();
    return out;
  } else {
    const Eigen::MatrixXd half = apply_right_transpose(P);
    out = apply_right_transpose(half.transpose());
  }
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd ArrowMatrix::sandwich_core(const Mat15& Q) const {
  const int n = dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const Mat15 AQ = core * Q;
  out.topLeftCorner<15, 15>() = AQ * core.transpose();
  std::uint64_t work = 2 * flops::gemm(15, 15, 15);
  if (m() > 0 && !coupling_is_zero()) {
    Eigen::Matrix<double, Eigen::Dynamic, 15> L(3 * m(), 15);
    for (int i = 0; i < m(); ++i) L.middleRows<3>(3 * i) = coupling[i];
    const Eigen::Matrix<double, Eigen::Dynamic, 15> LQ = L * Q;
    out.bottomLeftCorner(3 * m(), 15) = LQ * core.transpose();
    out.topRightCorner(15, 3 * m()) = out.bottomLeftCorner(3 * m(), 15).transpose();
    out.bottomRightCorner(3 * m(), 3 * m()) = LQ * L.transpose();
    work += flops::gemm(3 * m(), 15, 15) * 2 + flops::gemm(3 * m(), 15, 3 * m());
  }
  flops::add(work);
  return 0.5 * (out + out.transpose());
}

}  // namespace eqf
