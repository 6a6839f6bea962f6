#include "dfemd/kernels/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#define DFEMD_HAVE_NEON_KERNELS 1
#include <arm_neon.h>

#include <cmath>
#include <limits>

#include "exp_coeffs.hpp"
#endif

namespace dfemd::kernels {

#ifdef DFEMD_HAVE_NEON_KERNELS

namespace {

// exp(x) for x <= 0; arguments below kExpMin (including -inf) give 0.
inline float64x2_t exp_nonpositive(float64x2_t x) {
  using namespace detail;
  const uint64x2_t underflow = vcltq_f64(x, vdupq_n_f64(kExpMin));
  x = vmaxq_f64(x, vdupq_n_f64(kExpMin));

  const float64x2_t k = vrndnq_f64(vmulq_f64(x, vdupq_n_f64(kLog2e)));
  float64x2_t r = vfmsq_f64(x, k, vdupq_n_f64(kLn2Hi));
  r = vfmsq_f64(r, k, vdupq_n_f64(kLn2Lo));

  float64x2_t p = vdupq_n_f64(kExpTaylor[13]);
  for (int i = 12; i >= 0; --i) p = vfmaq_f64(vdupq_n_f64(kExpTaylor[i]), p, r);

  int64x2_t bits = vaddq_s64(vcvtq_s64_f64(k), vdupq_n_s64(1023));
  bits = vshlq_n_s64(bits, 52);
  const float64x2_t result = vmulq_f64(p, vreinterpretq_f64_s64(bits));
  return vreinterpretq_f64_u64(
      vbicq_u64(vreinterpretq_u64_f64(result), underflow));
}

double dot_f32(const float* a, const float* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t va = vld1q_f32(a + i);
    const float32x4_t vb = vld1q_f32(b + i);
    acc0 = vfmaq_f64(acc0, vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
    acc1 = vfmaq_f64(acc1, vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += double{a[i]} * double{b[i]};
  return sum;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double log_sum_exp_diff(const double* a, const double* b, double scale,
                        std::size_t n) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const float64x2_t vscale = vdupq_n_f64(scale);

  float64x2_t vmax = vdupq_n_f64(kNegInf);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t t = vmulq_f64(vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)), vscale);
    vmax = vmaxq_f64(vmax, t);
  }
  double m = vmaxvq_f64(vmax);
  for (; i < n; ++i) {
    const double t = (a[i] - b[i]) * scale;
    if (t > m) m = t;
  }
  if (m == kNegInf) return m;

  const float64x2_t vm = vdupq_n_f64(m);
  float64x2_t vsum = vdupq_n_f64(0.0);
  i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t t = vmulq_f64(vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)), vscale);
    vsum = vaddq_f64(vsum, exp_nonpositive(vsubq_f64(t, vm)));
  }
  double sum = vaddvq_f64(vsum);
  if (i < n) {
    const double tail[2] = {(a[i] - b[i]) * scale - m, kNegInf};
    sum += vaddvq_f64(exp_nonpositive(vld1q_f64(tail)));
  }
  return m + std::log(sum);
}

constexpr KernelTable kNeon{"neon", &dot_f32, &dot_f64, &log_sum_exp_diff};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

#else

const KernelTable* neon_table() { return nullptr; }

#endif

}  // namespace dfemd::kernels
