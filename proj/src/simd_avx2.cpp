#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "tlflr/simd.hpp"

// AVX2+FMA lane. Transcendentals use Cody-Waite argument reduction plus
// Taylor polynomials whose coefficients are exact rationals (1/k!), accurate
// to a few ulp on the reduced interval; that is well inside the tolerance the
// equivalence tests pin against the scalar lane. Compiled with -mavx2 -mfma;
// only dispatched to when the CPU reports both.
namespace tlflr::simd::avx2 {

namespace {

// ln(2) split with 29 trailing zero bits in the high part, so n*LN2_HI is
// exact for |n| < 2^20.
constexpr double kLog2e = 1.4426950408889634073599;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kExpLo = -708.39641853226410622;  // below: exp underflows to 0
constexpr double kExpHi = 709.78271289338399684;   // above: exp overflows to inf

// pi/2 split (fdlibm): valid Cody-Waite reduction for |x| well past 1e6.
constexpr double kPio2Hi = 1.57079632673412561417e+00;
constexpr double kPio2Lo = 6.07710050650619224932e-11;
constexpr double kTwoOverPi = 6.36619772367581382433e-01;

inline __m256d pow2i(__m128i n32) {
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_castsi256_pd(bits);
}

inline __m256d exp4(__m256d x) {
  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(kExpLo)),
                                   _mm256_set1_pd(kExpHi));
  __m128i n32 = _mm256_cvtpd_epi32(_mm256_mul_pd(xc, _mm256_set1_pd(kLog2e)));
  __m256d n = _mm256_cvtepi32_pd(n32);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Hi), xc);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Lo), r);

  // exp(r) on |r| <= ln(2)/2, Taylor through r^13.
  __m256d p = _mm256_set1_pd(1.6059043836821613e-10);  // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.08767569878681e-09));    // 1/12!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.505210838544172e-08));   // 1/11!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.755731922398589e-07));   // 1/10!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985893e-06));  // 1/9!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.48015873015873e-05));    // 1/8!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.984126984126984e-04));   // 1/7!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.388888888888889e-03));   // 1/6!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(8.333333333333333e-03));   // 1/5!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(4.1666666666666664e-02));  // 1/4!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.6666666666666666e-01));  // 1/3!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^n in two steps so the biased exponents stay in range.
  __m128i n1 = _mm_srai_epi32(n32, 1);
  __m128i n2 = _mm_sub_epi32(n32, n1);
  p = _mm256_mul_pd(_mm256_mul_pd(p, pow2i(n1)), pow2i(n2));

  p = _mm256_blendv_pd(p, _mm256_set1_pd(0.0),
                       _mm256_cmp_pd(x, _mm256_set1_pd(kExpLo), _CMP_LT_OQ));
  p = _mm256_blendv_pd(
      p, _mm256_set1_pd(HUGE_VAL),
      _mm256_cmp_pd(x, _mm256_set1_pd(kExpHi), _CMP_GT_OQ));
  return p;
}

// sin(r) = r + r^3 P(r^2), cos(r) = 1 - r^2/2 + r^4 Q(r^2) on |r| <= pi/4.
inline __m256d sin_poly(__m256d r, __m256d w) {
  __m256d p = _mm256_set1_pd(-7.647163731819816e-13);  // -1/15!
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.6059043836821613e-10));  // 1/13!
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(-2.505210838544172e-08));  // -1/11!
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(2.7557319223985893e-06));  // 1/9!
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(-1.984126984126984e-04));  // -1/7!
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(8.333333333333333e-03));   // 1/5!
  p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(-1.6666666666666666e-01)); // -1/3!
  return _mm256_fmadd_pd(_mm256_mul_pd(r, w), p, r);
}

inline __m256d cos_poly(__m256d w) {
  __m256d q = _mm256_set1_pd(4.779477332387385e-14);  // 1/16!
  q = _mm256_fmadd_pd(q, w, _mm256_set1_pd(-1.1470745597729725e-11)); // -1/14!
  q = _mm256_fmadd_pd(q, w, _mm256_set1_pd(2.08767569878681e-09));    // 1/12!
  q = _mm256_fmadd_pd(q, w, _mm256_set1_pd(-2.755731922398589e-07));  // -1/10!
  q = _mm256_fmadd_pd(q, w, _mm256_set1_pd(2.48015873015873e-05));    // 1/8!
  q = _mm256_fmadd_pd(q, w, _mm256_set1_pd(-1.388888888888889e-03));  // -1/6!
  q = _mm256_fmadd_pd(q, w, _mm256_set1_pd(4.1666666666666664e-02));  // 1/4!
  __m256d r = _mm256_fmadd_pd(_mm256_mul_pd(w, w), q, _mm256_set1_pd(1.0));
  return _mm256_fnmadd_pd(w, _mm256_set1_pd(0.5), r);
}

struct Reduced {
  __m256d r;
  __m128i q;
};

inline Reduced reduce_pio2(__m256d x) {
  __m128i q32 = _mm256_cvtpd_epi32(_mm256_mul_pd(x, _mm256_set1_pd(kTwoOverPi)));
  __m256d q = _mm256_cvtepi32_pd(q32);
  __m256d r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Hi), x);
  r = _mm256_fnmadd_pd(q, _mm256_set1_pd(kPio2Lo), r);
  return {r, q32};
}

inline __m256d mask_from_bit(__m128i q, int bit) {
  __m128i m = _mm_and_si128(q, _mm_set1_epi32(bit));
  __m256i wide = _mm256_cvtepi32_epi64(m);
  return _mm256_castsi256_pd(
      _mm256_cmpgt_epi64(wide, _mm256_setzero_si256()));
}

inline __m256d flip_sign(__m256d v, __m256d mask) {
  return _mm256_xor_pd(v, _mm256_and_pd(mask, _mm256_set1_pd(-0.0)));
}

inline __m256d cos4(__m256d x) {
  Reduced red = reduce_pio2(x);
  __m256d w = _mm256_mul_pd(red.r, red.r);
  __m256d s = sin_poly(red.r, w);
  __m256d c = cos_poly(w);
  // quadrant q: cos -> {+cos, -sin, -cos, +sin}
  __m256d use_sin = mask_from_bit(red.q, 1);
  __m256d out = _mm256_blendv_pd(c, s, use_sin);
  __m256d neg = mask_from_bit(_mm_add_epi32(red.q, _mm_set1_epi32(1)), 2);
  return flip_sign(out, neg);
}

inline __m256d sin4(__m256d x) {
  Reduced red = reduce_pio2(x);
  __m256d w = _mm256_mul_pd(red.r, red.r);
  __m256d s = sin_poly(red.r, w);
  __m256d c = cos_poly(w);
  // quadrant q: sin -> {+sin, +cos, -sin, -cos}
  __m256d use_cos = mask_from_bit(red.q, 1);
  __m256d out = _mm256_blendv_pd(s, c, use_cos);
  __m256d neg = mask_from_bit(red.q, 2);
  return flip_sign(out, neg);
}

template <typename F>
inline void map_inplace(double* x, std::size_t n, F&& f4, double (*f1)(double)) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, f4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] = f1(x[i]);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

bool available() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

void exp_inplace(double* x, std::size_t n) {
  map_inplace(x, n, [](__m256d v) { return exp4(v); },
              +[](double v) { return std::exp(v); });
}

void cos_inplace(double* x, std::size_t n) {
  map_inplace(x, n, [](__m256d v) { return cos4(v); },
              +[](double v) { return std::cos(v); });
}

void sin_inplace(double* x, std::size_t n) {
  map_inplace(x, n, [](__m256d v) { return sin4(v); },
              +[](double v) { return std::sin(v); });
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd(), acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1),
                                  _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double wdot(const double* w, const double* a, const double* b,
            std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d p0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    __m256d p1 = _mm256_mul_pd(_mm256_loadu_pd(w + i + 4), _mm256_loadu_pd(a + i + 4));
    acc0 = _mm256_fmadd_pd(p0, _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(p1, _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d p = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    acc0 = _mm256_fmadd_pd(p, _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += w[i] * a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                 _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace tlflr::simd::avx2
