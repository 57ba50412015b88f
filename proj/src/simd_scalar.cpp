#include <cmath>

#include "tlflr/simd.hpp"

// Reference lane. Reductions are written as plain sequential loops on
// purpose: strict FP semantics keep them un-reassociated, so they define the
// baseline the AVX2 lane is equivalence-tested against.
namespace tlflr::simd::scalar {

void exp_inplace(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(x[i]);
}

void cos_inplace(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(x[i]);
}

void sin_inplace(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(x[i]);
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double wdot(const double* w, const double* a, const double* b,
            std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace tlflr::simd::scalar
