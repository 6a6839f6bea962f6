#include <cmath>
#include <limits>

#include "dfemd/kernels/kernels.hpp"

namespace dfemd::kernels {

namespace {

double dot_f32(const float* a, const float* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += double{a[i]} * double{b[i]};
  return sum;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double log_sum_exp_diff(const double* a, const double* b, double scale,
                        std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (a[i] - b[i]) * scale;
    if (t > m) m = t;
  }
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp((a[i] - b[i]) * scale - m);
  return m + std::log(sum);
}

constexpr KernelTable kScalar{"scalar", &dot_f32, &dot_f64, &log_sum_exp_diff};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace dfemd::kernels
