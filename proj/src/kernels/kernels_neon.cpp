// NEON variants for aarch64. Two f64 lanes per vector; same contracts as the
// scalar path.

#include "magescan/kernels.hpp"

#if defined(__ARM_NEON) && defined(__aarch64__)

#include <arm_neon.h>

#include <algorithm>

namespace magescan::kern {
namespace {

double dot_neon(std::span<const double> a, std::span<const double> b) {
  std::size_t n = a.size();
  std::size_t i = 0;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (; i + 2 <= n; i += 2) {
    acc = vfmaq_f64(acc, vld1q_f64(a.data() + i), vld1q_f64(b.data() + i));
  }
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sqdist_neon(std::span<const double> a, std::span<const double> b) {
  std::size_t n = a.size();
  std::size_t i = 0;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    r += d * d;
  }
  return r;
}

double sum_neon(std::span<const double> a) {
  std::size_t n = a.size();
  std::size_t i = 0;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a.data() + i));
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}

void axpy_neon(double alpha, std::span<const double> x, std::span<double> y) {
  std::size_t n = x.size();
  std::size_t i = 0;
  float64x2_t va = vdupq_n_f64(alpha);
  for (; i + 2 <= n; i += 2) {
    float64x2_t vy = vld1q_f64(y.data() + i);
    vy = vfmaq_f64(vy, va, vld1q_f64(x.data() + i));
    vst1q_f64(y.data() + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_neon(double alpha, std::span<double> x) {
  std::size_t n = x.size();
  std::size_t i = 0;
  float64x2_t va = vdupq_n_f64(alpha);
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(x.data() + i, vmulq_f64(va, vld1q_f64(x.data() + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

void clamp_neon(std::span<double> x, std::span<const double> lo,
                std::span<const double> hi) {
  std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(x.data() + i);
    v = vmaxq_f64(v, vld1q_f64(lo.data() + i));
    v = vminq_f64(v, vld1q_f64(hi.data() + i));
    vst1q_f64(x.data() + i, v);
  }
  for (; i < n; ++i) x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
}

}  // namespace

const Kernels* neon_kernels_impl() {
  static const Kernels k = {"neon",     dot_neon,   sqdist_neon, sum_neon,
                            axpy_neon,  scale_neon, clamp_neon};
  return &k;
}

}  // namespace magescan::kern

#else

namespace magescan::kern {
const Kernels* neon_kernels_impl() { return nullptr; }
}  // namespace magescan::kern

#endif
