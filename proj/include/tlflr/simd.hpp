#pragma once

#include <cstddef>

// Vectorized primitives behind the numeric hot loops: elementwise
// transcendental maps used by kernel-matrix fills, and fused reductions used
// by quadrature inner products. Scalar reference implementations always
// exist; an AVX2+FMA variant is compiled on x86-64 and picked at runtime when
// the CPU supports it. The two lanes are equivalence-tested against each
// other (they may differ by reassociation/polynomial rounding, not more).
// The avx2 exp flushes subnormal results (arguments below about -708.4) to
// zero; cos/sin require |x| below ~1e9 (int32 quadrant reduction).
namespace tlflr::simd {

// Elementwise, in place.
void exp_inplace(double* x, std::size_t n);
void cos_inplace(double* x, std::size_t n);
void sin_inplace(double* x, std::size_t n);

// Reductions.
double dot(const double* a, const double* b, std::size_t n);
double wdot(const double* w, const double* a, const double* b, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

/// Name of the lane currently dispatched to: "avx2" or "scalar".
const char* active_backend();

/// Test hook: force "scalar", "avx2", or "auto". Throws if the requested
/// lane is unavailable on this machine.
void force_backend(const char* name);

namespace scalar {
void exp_inplace(double* x, std::size_t n);
void cos_inplace(double* x, std::size_t n);
void sin_inplace(double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double wdot(const double* w, const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
/// True when the AVX2 lane is compiled in and the CPU reports AVX2+FMA.
bool available();
void exp_inplace(double* x, std::size_t n);
void cos_inplace(double* x, std::size_t n);
void sin_inplace(double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double wdot(const double* w, const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

}  // namespace tlflr::simd
