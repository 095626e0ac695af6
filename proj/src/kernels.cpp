#include "eqf/kernels.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

#if defined(__x86_64__) || defined(_M_X64)
#define EQF_X86 1
#include <immintrin.h>
#else
#define EQF_X86 0
#endif

#if defined(__aarch64__)
#define EQF_NEON 1
#include <arm_neon.h>
#else
#define EQF_NEON 0
#endif

namespace eqf::kernels {

void combine_columns_scalar(double* dst, const double* const* src, const double* coeff, int count, int n) {
  for (int r = 0; r < n; ++r) {
    double acc = dst[r];
    for (int k = 0; k < count; ++k) acc += coeff[k] * src[k][r];
    dst[r] = acc;
  }
}

#if EQF_X86
__attribute__((target("avx2,fma"))) static void combine_columns_avx2(double* dst, const double* const* src,
                                                                       const double* coeff, int count, int n) {
  int r = 0;
  for (; r + 8 <= n; r += 8) {
    __m256d a0 = _mm256_loadu_pd(dst + r);
    __m256d a1 = _mm256_loadu_pd(dst + r + 4);
    for (int k = 0; k < count; ++k) {
      const __m256d c = _mm256_set1_pd(coeff[k]);
      a0 = _mm256_fmadd_pd(c, _mm256_loadu_pd(src[k] + r), a0);
      a1 = _mm256_fmadd_pd(c, _mm256_loadu_pd(src[k] + r + 4), a1);
    }
    _mm256_storeu_pd(dst + r, a0);
    _mm256_storeu_pd(dst + r + 4, a1);
  }
  for (; r + 4 <= n; r += 4) {
    __m256d a = _mm256_loadu_pd(dst + r);
    for (int k = 0; k < count; ++k) a = _mm256_fmadd_pd(_mm256_set1_pd(coeff[k]), _mm256_loadu_pd(src[k] + r), a);
    _mm256_storeu_pd(dst + r, a);
  }
  for (; r < n; ++r) {
    double acc = dst[r];
    for (int k = 0; k < count; ++k) acc = __builtin_fma(coeff[k], src[k][r], acc);
    dst[r] = acc;
  }
}
#endif

#if EQF_NEON
static void combine_columns_neon(double* dst, const double* const* src, const double* coeff, int count, int n) {
  int r = 0;
  for (; r + 2 <= n; r += 2) {
    float64x2_t a = vld1q_f64(dst + r);
    for (int k = 0; k < count; ++k) a = vfmaq_n_f64(a, vld1q_f64(src[k] + r), coeff[k]);
    vst1q_f64(dst + r, a);
  }
  for (; r < n; ++r) {
    double acc = dst[r];
    for (int k = 0; k < count; ++k) acc += coeff[k] * src[k][r];
    dst[r] = acc;
  }
}
#endif

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if EQF_X86
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::Neon: return EQF_NEON != 0;
  }
  return false;
}

CombineFn backend_fn(Backend backend) {
  if (!backend_available(backend))
    throw std::invalid_argument("kernel backend " + std::string(backend_name(backend)) + " unavailable");
  switch (backend) {
    case Backend::Scalar: return &combine_columns_scalar;
#if EQF_X86
    case Backend::Avx2: return &combine_columns_avx2;
#endif
#if EQF_NEON
    case Backend::Neon: return &combine_columns_neon;
#endif
    default: break;
  }
  return &combine_columns_scalar;
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "?";
}

namespace {

Backend best_backend() {
  if (backend_available(Backend::Avx2)) return Backend::Avx2;
  if (backend_available(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

std::atomic<Backend> g_backend{best_backend()};
std::atomic<CombineFn> g_fn{backend_fn(best_backend())};

}  // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  g_fn.store(backend_fn(backend), std::memory_order_relaxed);
  g_backend.store(backend, std::memory_order_relaxed);
}

void combine_columns(double* dst, const double* const* src, const double* coeff, int count, int n) {
  g_fn.load(std::memory_order_relaxed)(dst, src, coeff, count, n);
}

}  // namespace eqf::kernels
