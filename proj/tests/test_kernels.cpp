#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "magescan/kernels.hpp"

using namespace magescan;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> dist(0.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

bool close(double a, double b, double tol = 1e-11) {
  double scale = std::max({std::abs(a), std::abs(b), 1.0});
  return std::abs(a - b) <= tol * scale;
}

}  // namespace

TEST_CASE("every available kernel path agrees with the scalar reference") {
  const auto& scalar = kern::scalar_kernels();
  std::mt19937_64 rng(20240817);
  // odd lengths exercise the vector remainders
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 13u, 64u, 103u, 257u}) {
    for (int rep = 0; rep < 5; ++rep) {
      auto a = random_vector(rng, n);
      auto b = random_vector(rng, n);
      for (const kern::Kernels* k : kern::available_kernels()) {
        CAPTURE(k->name);
        CAPTURE(n);
        CHECK(close(k->dot(a, b), scalar.dot(a, b)));
        CHECK(close(k->squared_distance(a, b), scalar.squared_distance(a, b)));
        CHECK(close(k->sum(a), scalar.sum(a)));

        auto y1 = b, y2 = b;
        scalar.axpy(0.37, a, y1);
        k->axpy(0.37, a, y2);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i]));

        auto s1 = a, s2 = a;
        scalar.scale(-1.75, s1);
        k->scale(-1.75, s2);
        for (std::size_t i = 0; i < n; ++i) CHECK(s1[i] == s2[i]);

        auto lo = random_vector(rng, n);
        auto hi = lo;
        for (double& v : hi) v += 1.0;
        auto c1 = a, c2 = a;
        scalar.clamp_box(c1, lo, hi);
        k->clamp_box(c2, lo, hi);
        for (std::size_t i = 0; i < n; ++i) CHECK(c1[i] == c2[i]);
      }
    }
  }
}

TEST_CASE("kernel basics") {
  std::vector<double> a{1.0, 2.0, 3.0};
  std::vector<double> b{4.0, -5.0, 6.0};
  CHECK(kern::dot(a, b) == doctest::Approx(1 * 4 - 2 * 5 + 3 * 6));
  CHECK(kern::squared_distance(a, b) ==
        doctest::Approx(9.0 + 49.0 + 9.0));
  CHECK(kern::sum(b) == doctest::Approx(5.0));
}
