#include <algorithm>

#include "magescan/kernels.hpp"

namespace magescan::kern {
namespace {

double dot_scalar(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sqdist_scalar(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double sum_scalar(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v;
  return acc;
}

void axpy_scalar(double alpha, std::span<const double> x,
                 std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

void clamp_scalar(std::span<double> x, std::span<const double> lo,
                  std::span<const double> hi) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k = {"scalar",      dot_scalar,   sqdist_scalar,
                            sum_scalar,    axpy_scalar,  scale_scalar,
                            clamp_scalar};
  return k;
}

}  // namespace magescan::kern
