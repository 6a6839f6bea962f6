#include "dfemd/kernels/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define DFEMD_HAVE_AVX2_KERNELS 1
#include <immintrin.h>

#include <cmath>
#include <limits>

#include "exp_coeffs.hpp"
#endif

namespace dfemd::kernels {

#ifdef DFEMD_HAVE_AVX2_KERNELS

// Every function here carries the target attribute instead of compiling the
// file with -mavx2, so no AVX2 code leaks into inline functions shared with
// other translation units.
#define DFEMD_AVX2 __attribute__((target("avx2,fma")))

namespace {

DFEMD_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

DFEMD_AVX2 inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// exp(x) for x <= 0; arguments below kExpMin (including -inf) give 0.
DFEMD_AVX2 inline __m256d exp_nonpositive(__m256d x) {
  using namespace detail;
  const __m256d underflow = _mm256_cmp_pd(x, _mm256_set1_pd(kExpMin), _CMP_LT_OQ);
  x = _mm256_max_pd(x, _mm256_set1_pd(kExpMin));

  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kLn2Lo), r);

  __m256d p = _mm256_set1_pd(kExpTaylor[13]);
  for (int i = 12; i >= 0; --i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kExpTaylor[i]));

  // 2^k through the exponent field; k is in [-1022, 0] after clamping.
  const __m128i k32 = _mm256_cvtpd_epi32(k);
  __m256i bits = _mm256_cvtepi32_epi64(k32);
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  bits = _mm256_slli_epi64(bits, 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, result);
}

DFEMD_AVX2 double dot_f32(const float* a, const float* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                           _mm256_cvtps_pd(_mm256_castps256_ps128(vb)), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                           _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm_loadu_ps(a + i)),
                           _mm256_cvtps_pd(_mm_loadu_ps(b + i)), acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += double{a[i]} * double{b[i]};
  return sum;
}

DFEMD_AVX2 double dot_f64(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

DFEMD_AVX2 double log_sum_exp_diff(const double* a, const double* b, double scale,
                                   std::size_t n) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const __m256d vscale = _mm256_set1_pd(scale);

  __m256d vmax = _mm256_set1_pd(kNegInf);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_mul_pd(
        _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)), vscale);
    vmax = _mm256_max_pd(vmax, t);
  }
  double m = hmax(vmax);
  for (; i < n; ++i) {
    const double t = (a[i] - b[i]) * scale;
    if (t > m) m = t;
  }
  if (m == kNegInf) return m;

  const __m256d vm = _mm256_set1_pd(m);
  __m256d vsum = _mm256_setzero_pd();
  i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_mul_pd(
        _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)), vscale);
    vsum = _mm256_add_pd(vsum, exp_nonpositive(_mm256_sub_pd(t, vm)));
  }
  double sum = hsum(vsum);
  if (i < n) {
    // Pad the tail to a full vector so the same exp approximation is used.
    alignas(32) double tail[4] = {kNegInf, kNegInf, kNegInf, kNegInf};
    for (std::size_t j = 0; i + j < n; ++j) tail[j] = (a[i + j] - b[i + j]) * scale - m;
    sum += hsum(exp_nonpositive(_mm256_load_pd(tail)));
  }
  return m + std::log(sum);
}

constexpr KernelTable kAvx2{"avx2", &dot_f32, &dot_f64, &log_sum_exp_diff};

}  // namespace

const KernelTable* avx2_table() {
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2 : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace dfemd::kernels
