#include <doctest.h>

#include <cmath>
#include <vector>

#include "tlflr/rng.hpp"
#include "tlflr/simd.hpp"

using namespace tlflr;

namespace {

std::vector<double> random_values(int n, double lo, double hi,
                                  std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("scalar transforms match libm by definition") {
  auto v = random_values(37, -20.0, 20.0, 11);
  auto w = v;
  simd::scalar::exp_inplace(w.data(), w.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(w[i] == std::exp(v[i]));
}

TEST_CASE("avx2 lane agrees with the scalar lane") {
  if (!simd::avx2::available()) {
    MESSAGE("avx2 unavailable on this machine; lane equivalence not run");
    return;
  }

  SUBCASE("exp over kernel-argument ranges, all remainder lengths") {
    for (int n : {0, 1, 2, 3, 4, 5, 7, 8, 64, 257}) {
      auto v = random_values(n, -40.0, 3.0, 100 + n);
      auto a = v, b = v;
      simd::scalar::exp_inplace(a.data(), a.size());
      simd::avx2::exp_inplace(b.data(), b.size());
      for (int i = 0; i < n; ++i)
        CHECK(std::abs(a[i] - b[i]) <= 1e-13 * std::abs(a[i]));
    }
  }

  SUBCASE("exp over the full finite range including clamps") {
    std::vector<double> v = {-1000.0, -708.5, -700.0, -1.0, 0.0,
                             1.0,     700.0,  709.7,  710.0, 800.0};
    auto a = v, b = v;
    simd::scalar::exp_inplace(a.data(), a.size());
    simd::avx2::exp_inplace(b.data(), b.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (std::isinf(a[i]))
        CHECK(std::isinf(b[i]));
      else if (a[i] < 2.3e-308)  // subnormal region flushes to zero
        CHECK(b[i] <= 2.3e-308);
      else
        CHECK(std::abs(a[i] - b[i]) <= 1e-13 * std::abs(a[i]));
    }
  }

  SUBCASE("cos and sin over the frequency range the kernels use") {
    for (int n : {1, 3, 4, 6, 128, 333}) {
      auto v = random_values(n, -200.0, 200.0, 300 + n);
      auto a1 = v, b1 = v, a2 = v, b2 = v;
      simd::scalar::cos_inplace(a1.data(), a1.size());
      simd::avx2::cos_inplace(b1.data(), b1.size());
      simd::scalar::sin_inplace(a2.data(), a2.size());
      simd::avx2::sin_inplace(b2.data(), b2.size());
      for (int i = 0; i < n; ++i) {
        CHECK(std::abs(a1[i] - b1[i]) <= 2e-14);
        CHECK(std::abs(a2[i] - b2[i]) <= 2e-14);
      }
    }
  }

  SUBCASE("reductions agree to reassociation error") {
    for (int n : {0, 1, 5, 16, 17, 100, 1001}) {
      auto a = random_values(n, -2.0, 2.0, 500 + n);
      auto b = random_values(n, -2.0, 2.0, 600 + n);
      auto w = random_values(n, 0.0, 1.0, 700 + n);
      const double d1 = simd::scalar::dot(a.data(), b.data(), n);
      const double d2 = simd::avx2::dot(a.data(), b.data(), n);
      CHECK(std::abs(d1 - d2) <= 1e-12 * (1.0 + std::abs(d1)));
      const double w1 = simd::scalar::wdot(w.data(), a.data(), b.data(), n);
      const double w2 = simd::avx2::wdot(w.data(), a.data(), b.data(), n);
      CHECK(std::abs(w1 - w2) <= 1e-12 * (1.0 + std::abs(w1)));
      auto y1 = random_values(n, -1.0, 1.0, 800 + n);
      auto y2 = y1;
      simd::scalar::axpy(0.37, a.data(), y1.data(), n);
      simd::avx2::axpy(0.37, a.data(), y2.data(), n);
      for (int i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("runtime dispatch reports a lane and can be forced") {
  const std::string original = simd::active_backend();
  CHECK((original == "avx2" || original == "scalar"));

  simd::force_backend("scalar");
  CHECK(std::string(simd::active_backend()) == "scalar");
  double x[4] = {0.0, 1.0, -1.0, 2.0};
  simd::exp_inplace(x, 4);
  CHECK(x[1] == std::exp(1.0));

  if (simd::avx2::available()) {
    simd::force_backend("avx2");
    CHECK(std::string(simd::active_backend()) == "avx2");
  }
  simd::force_backend("auto");
  CHECK(std::string(simd::active_backend()) == original);
  CHECK_THROWS(simd::force_backend("neon"));
}
