#pragma once

#include <cstddef>
#include <span>
#include <string>

// Dense double-precision vector primitives behind the classifier, attack,
// and attribution inner loops. Two implementations exist: a scalar reference
// and an AVX2 variant (NEON on aarch64); the active one is chosen once at
// runtime from CPU capabilities. Set MAGESCAN_KERNELS=scalar|avx2|neon to
// force a path (used by the equivalence tests).

namespace magescan::kern {

struct Kernels {
  const char* name;
  double (*dot)(std::span<const double> a, std::span<const double> b);
  double (*squared_distance)(std::span<const double> a,
                             std::span<const double> b);
  double (*sum)(std::span<const double> a);
  // y += alpha * x
  void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);
  void (*scale)(double alpha, std::span<double> x);
  // x[i] = min(max(x[i], lo[i]), hi[i])
  void (*clamp_box)(std::span<double> x, std::span<const double> lo,
                    std::span<const double> hi);
};

// Scalar reference path, always available.
const Kernels& scalar_kernels();

// Path selected for this process (scalar when no SIMD support is present).
const Kernels& active_kernels();

// All paths usable on this machine, for equivalence testing.
std::span<const Kernels* const> available_kernels();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active_kernels().dot(a, b);
}
inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  return active_kernels().squared_distance(a, b);
}
inline double sum(std::span<const double> a) { return active_kernels().sum(a); }
inline void axpy(double alpha, std::span<const double> x,
                 std::span<double> y) {
  active_kernels().axpy(alpha, x, y);
}
inline void scale(double alpha, std::span<double> x) {
  active_kernels().scale(alpha, x);
}
inline void clamp_box(std::span<double> x, std::span<const double> lo,
                      std::span<const double> hi) {
  active_kernels().clamp_box(x, lo, hi);
}

}  // namespace magescan::kern
