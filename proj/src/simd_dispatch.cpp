#include <cstring>
#include <stdexcept>

#include "tlflr/simd.hpp"

namespace tlflr::simd {

namespace {

struct Table {
  void (*exp_ip)(double*, std::size_t);
  void (*cos_ip)(double*, std::size_t);
  void (*sin_ip)(double*, std::size_t);
  double (*dot_fn)(const double*, const double*, std::size_t);
  double (*wdot_fn)(const double*, const double*, const double*, std::size_t);
  void (*axpy_fn)(double, const double*, double*, std::size_t);
  const char* name;
};

constexpr Table kScalar{scalar::exp_inplace, scalar::cos_inplace,
                        scalar::sin_inplace, scalar::dot,
                        scalar::wdot,        scalar::axpy,
                        "scalar"};

#if defined(TLFLR_HAVE_AVX2_TU)
constexpr Table kAvx2{avx2::exp_inplace, avx2::cos_inplace, avx2::sin_inplace,
                      avx2::dot,         avx2::wdot,        avx2::axpy,
                      "avx2"};
#endif

Table detect() {
#if defined(TLFLR_HAVE_AVX2_TU)
  if (avx2::available()) return kAvx2;
#endif
  return kScalar;
}

Table& table() {
  static Table t = detect();
  return t;
}

}  // namespace

void exp_inplace(double* x, std::size_t n) { table().exp_ip(x, n); }
void cos_inplace(double* x, std::size_t n) { table().cos_ip(x, n); }
void sin_inplace(double* x, std::size_t n) { table().sin_ip(x, n); }
double dot(const double* a, const double* b, std::size_t n) {
  return table().dot_fn(a, b, n);
}
double wdot(const double* w, const double* a, const double* b,
            std::size_t n) {
  return table().wdot_fn(w, a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  table().axpy_fn(alpha, x, y, n);
}

const char* active_backend() { return table().name; }

void force_backend(const char* name) {
  if (name == nullptr || std::strcmp(name, "auto") == 0) {
    table() = detect();
    return;
  }
  if (std::strcmp(name, "scalar") == 0) {
    table() = kScalar;
    return;
  }
#if defined(TLFLR_HAVE_AVX2_TU)
  if (std::strcmp(name, "avx2") == 0 && avx2::available()) {
    table() = kAvx2;
    return;
  }
#endif
  throw std::invalid_argument("unavailable simd backend requested");
}

#if !defined(TLFLR_HAVE_AVX2_TU)
namespace avx2 {
bool available() { return false; }
void exp_inplace(double*, std::size_t) {
  throw std::runtime_error("avx2 lane not built");
}
void cos_inplace(double*, std::size_t) {
  throw std::runtime_error("avx2 lane not built");
}
void sin_inplace(double*, std::size_t) {
  throw std::runtime_error("avx2 lane not built");
}
double dot(const double*, const double*, std::size_t) {
  throw std::runtime_error("avx2 lane not built");
}
double wdot(const double*, const double*, const double*, std::size_t) {
  throw std::runtime_error("avx2 lane not built");
}
void axpy(double, const double*, double*, std::size_t) {
  throw std::runtime_error("avx2 lane not built");
}
}  // namespace avx2
#endif

}  // namespace tlflr::simd
