// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma on
// x86_64 only; dispatch.cpp checks cpu support before handing out pointers.

#include "magescan/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>

namespace magescan::kern {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swap = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

double dot_avx2(std::span<const double> a, std::span<const double> b) {
  std::size_t n = a.size();
  std::size_t i = 0;
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i),
                           _mm256_loadu_pd(b.data() + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4),
                           _mm256_loadu_pd(b.data() + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i),
                           _mm256_loadu_pd(b.data() + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sqdist_avx2(std::span<const double> a, std::span<const double> b) {
  std::size_t n = a.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i),
                              _mm256_loadu_pd(b.data() + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    r += d * d;
  }
  return r;
}

double sum_avx2(std::span<const double> a) {
  std::size_t n = a.size();
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(a.data() + i));
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}

void axpy_avx2(double alpha, std::span<const double> x, std::span<double> y) {
  std::size_t n = x.size();
  std::size_t i = 0;
  __m256d va = _mm256_set1_pd(alpha);
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y.data() + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i), vy);
    _mm256_storeu_pd(y.data() + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double alpha, std::span<double> x) {
  std::size_t n = x.size();
  std::size_t i = 0;
  __m256d va = _mm256_set1_pd(alpha);
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x.data() + i,
                     _mm256_mul_pd(va, _mm256_loadu_pd(x.data() + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

void clamp_avx2(std::span<double> x, std::span<const double> lo,
                std::span<const double> hi) {
  std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x.data() + i);
    v = _mm256_max_pd(v, _mm256_loadu_pd(lo.data() + i));
    v = _mm256_min_pd(v, _mm256_loadu_pd(hi.data() + i));
    _mm256_storeu_pd(x.data() + i, v);
  }
  for (; i < n; ++i) x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
}

}  // namespace

const Kernels* avx2_kernels_impl() {
  static const Kernels k = {"avx2",     dot_avx2,   sqdist_avx2, sum_avx2,
                            axpy_avx2,  scale_avx2, clamp_avx2};
  return &k;
}

}  // namespace magescan::kern

#else

namespace magescan::kern {
const Kernels* avx2_kernels_impl() { return nullptr; }
}  // namespace magescan::kern

#endif
