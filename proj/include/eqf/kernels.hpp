#pragma once

#include <string_view>

// Column-combination kernel behind the block-sparse covariance updates:
//   dst[r] += sum_k coeff[k] * src[k][r],  r < n.
// A scalar reference and vector variants share one signature; the active one is picked at
// startup from the running CPU and can be pinned for equivalence tests.
namespace eqf::kernels {

enum class Backend { Scalar, Avx2, Neon };

using CombineFn = void (*)(double* dst, const double* const* src, const double* coeff, int count, int n);

void combine_columns_scalar(double* dst, const double* const* src, const double* coeff, int count, int n);

bool backend_available(Backend backend);
/// Throws std::invalid_argument when the backend is not available on this CPU/build.
CombineFn backend_fn(Backend backend);
Backend active_backend();
void set_backend(Backend backend);
std::string_view backend_name(Backend backend);

void combine_columns(double* dst, const double* const* src, const double* coeff, int count, int n);

}  // namespace eqf::kernels
