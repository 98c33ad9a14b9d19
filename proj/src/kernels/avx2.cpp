// AVX2 + FMA variants of the kernels in scalar.cpp. This translation unit is
// compiled with -mavx2 -mfma and must only be entered after the runtime CPU
// check in dispatch.cpp.

#include <immintrin.h>

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "jsdscore/kernels.hpp"

namespace jsdscore::kernels {
namespace {

// exp(x) for x <= 709. Inputs below -708 return 0 (the scalar path would
// return a subnormal < 3.4e-308). Cody-Waite reduction by ln2 followed by a
// degree-13 Taylor polynomial on |r| <= ln2/2; error is within a few ulp.
inline __m256d exp_pd(__m256d x) {
  const __m256d kUnderflow = _mm256_set1_pd(-708.0);
  const __m256d zero_mask = _mm256_cmp_pd(x, kUnderflow, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, kUnderflow), _mm256_set1_pd(709.0));

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634074)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180559945286227e-01), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(2.31904681384629955842e-17), r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);  // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^n through the exponent field; n is in [-1021, 1023] after clamping.
  __m256i e = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
  e = _mm256_slli_epi64(_mm256_add_epi64(e, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(e));
  return _mm256_andnot_pd(zero_mask, result);
}

// log2(x) for finite x > 0, subnormals included. Splits x = 2^e * m with
// m in [sqrt(1/2), sqrt(2)) and evaluates ln(m) = 2 atanh((m-1)/(m+1)).
inline __m256d log2_pd(__m256d x) {
  const __m256d sub_mask = _mm256_cmp_pd(x, _mm256_set1_pd(DBL_MIN), _CMP_LT_OQ);
  x = _mm256_blendv_pd(x, _mm256_mul_pd(x, _mm256_set1_pd(0x1p54)), sub_mask);
  __m256d e_adj = _mm256_and_pd(sub_mask, _mm256_set1_pd(-54.0));

  const __m256i bits = _mm256_castpd_si256(x);
  // Biased exponent as double via the 2^52 magic-number trick.
  const __m256i biased = _mm256_srli_epi64(bits, 52);
  const __m256d magic = _mm256_set1_pd(0x1p52);
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(biased, _mm256_castpd_si256(magic))), magic);
  e = _mm256_add_pd(_mm256_sub_pd(e, _mm256_set1_pd(1023.0)), e_adj);

  const __m256i mant_bits = _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                                            _mm256_set1_epi64x(0x3FF0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant_bits);
  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(1.41421356237309504880), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d s2 = _mm256_mul_pd(s, s);
  __m256d t = _mm256_set1_pd(1.0 / 19.0);
  t = _mm256_fmadd_pd(t, s2, _mm256_set1_pd(1.0 / 17.0));
  t = _mm256_fmadd_pd(t, s2, _mm256_set1_pd(1.0 / 15.0));
  t = _mm256_fmadd_pd(t, s2, _mm256_set1_pd(1.0 / 13.0));
  t = _mm256_fmadd_pd(t, s2, _mm256_set1_pd(1.0 / 11.0));
  t = _mm256_fmadd_pd(t, s2, _mm256_set1_pd(1.0 / 9.0));
  t = _mm256_fmadd_pd(t, s2, _mm256_set1_pd(1.0 / 7.0));
  t = _mm256_fmadd_pd(t, s2, _mm256_set1_pd(1.0 / 5.0));
  t = _mm256_fmadd_pd(t, s2, _mm256_set1_pd(1.0 / 3.0));
  t = _mm256_fmadd_pd(t, s2, one);
  // ln(m) * log2(e) = 2 s t / ln 2
  const __m256d log2m = _mm256_mul_pd(_mm256_mul_pd(s, t), _mm256_set1_pd(2.0 * 1.4426950408889634074));
  return _mm256_add_pd(e, log2m);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void gaussian_accumulate(double lo, double step, double inv_h, std::span<const double> centers,
                         std::span<double> out) {
  const std::size_t n = out.size();
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vstep = _mm256_set1_pd(step);
  const __m256d vinv = _mm256_set1_pd(inv_h);
  const __m256d neg_half = _mm256_set1_pd(-0.5);
  const __m256d lane = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);

  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d base = _mm256_set1_pd(static_cast<double>(i));
    const __m256d x0 = _mm256_add_pd(vlo, _mm256_mul_pd(_mm256_add_pd(base, lane), vstep));
    const __m256d x1 =
        _mm256_add_pd(vlo, _mm256_mul_pd(_mm256_add_pd(_mm256_add_pd(base, _mm256_set1_pd(4.0)), lane), vstep));
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (double c : centers) {
      const __m256d vc = _mm256_set1_pd(c);
      const __m256d z0 = _mm256_mul_pd(_mm256_sub_pd(x0, vc), vinv);
      const __m256d z1 = _mm256_mul_pd(_mm256_sub_pd(x1, vc), vinv);
      acc0 = _mm256_add_pd(acc0, exp_pd(_mm256_mul_pd(neg_half, _mm256_mul_pd(z0, z0))));
      acc1 = _mm256_add_pd(acc1, exp_pd(_mm256_mul_pd(neg_half, _mm256_mul_pd(z1, z1))));
    }
    _mm256_storeu_pd(out.data() + i, _mm256_add_pd(_mm256_loadu_pd(out.data() + i), acc0));
    _mm256_storeu_pd(out.data() + i + 4, _mm256_add_pd(_mm256_loadu_pd(out.data() + i + 4), acc1));
  }
  if (i < n) scalar().gaussian_accumulate(lo + static_cast<double>(i) * step, step, inv_h, centers, out.subspan(i));
}

double trapezoid(std::span<const double> y, double step) {
  const std::size_t n = y.size();
  if (n < 2) return 0.0;
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 1;
  for (; i + 8 <= n - 1; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(y.data() + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(y.data() + i + 4));
  }
  double interior = hsum(_mm256_add_pd(acc0, acc1));
  for (; i + 1 < n; ++i) interior += y[i];
  return step * (interior + 0.5 * (y.front() + y.back()));
}

inline double kl_term(double p, double q) {
  if (p <= 0.0) return 0.0;
  return p * std::log2(p / std::max(q, kDensityFloor));
}

inline __m256d kl_term_pd(__m256d p, __m256d q) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d pos = _mm256_cmp_pd(p, zero, _CMP_GT_OQ);
  const __m256d ratio = _mm256_div_pd(p, _mm256_max_pd(q, _mm256_set1_pd(kDensityFloor)));
  const __m256d safe = _mm256_blendv_pd(_mm256_set1_pd(1.0), ratio, pos);
  return _mm256_and_pd(pos, _mm256_mul_pd(p, log2_pd(safe)));
}

double kl_trapezoid(std::span<const double> p, std::span<const double> q, double step) {
  const std::size_t n = p.size();
  if (n < 2) return 0.0;
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 1;
  for (; i + 8 <= n - 1; i += 8) {
    acc0 = _mm256_add_pd(acc0, kl_term_pd(_mm256_loadu_pd(p.data() + i), _mm256_loadu_pd(q.data() + i)));
    acc1 = _mm256_add_pd(acc1, kl_term_pd(_mm256_loadu_pd(p.data() + i + 4), _mm256_loadu_pd(q.data() + i + 4)));
  }
  double interior = hsum(_mm256_add_pd(acc0, acc1));
  for (; i + 1 < n; ++i) interior += kl_term(p[i], q[i]);
  return step * (interior + 0.5 * (kl_term(p[0], q[0]) + kl_term(p[n - 1], q[n - 1])));
}

constexpr KernelTable kAvx2{"avx2", &gaussian_accumulate, &trapezoid, &kl_trapezoid};

}  // namespace

const KernelTable& avx2_table() noexcept { return kAvx2; }

}  // namespace jsdscore::kernels
