#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Inner-loop arithmetic kernels. A scalar reference implementation is always
// built; AVX2+FMA (x86-64) and NEON (aarch64) variants are compiled when the
// target architecture allows and selected at runtime.

namespace dfemd::kernels {

struct KernelTable {
  std::string_view name;

  // Dot product of two float vectors, accumulated in double.
  double (*dot_f32)(const float* a, const float* b, std::size_t n);

  double (*dot_f64)(const double* a, const double* b, std::size_t n);

  // log(sum_j exp((a[j] - b[j]) * scale)), computed with max-shift. Entries
  // with a[j] == -inf contribute zero. Returns -inf when every term does.
  double (*log_sum_exp_diff)(const double* a, const double* b, double scale,
                             std::size_t n);
};

const KernelTable& scalar_table();

// nullptr when the variant was not compiled in or the running CPU lacks the
// instruction set.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// All tables usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

// Table used by the library. Chosen once: the best available variant, unless
// DFEMD_SIMD=scalar|avx2|neon requests a specific one.
const KernelTable& active();

inline double dot(std::span<const float> a, std::span<const float> b) {
  return active().dot_f32(a.data(), b.data(), a.size());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot_f64(a.data(), b.data(), a.size());
}

}  // namespace dfemd::kernels
