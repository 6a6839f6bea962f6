#include <algorithm>
#include <cmath>
#include <string>

#include "dfemd/emd.hpp"
#include "dfemd/error.hpp"
#include "dfemd/kernels/kernels.hpp"

namespace dfemd {

namespace {

// Squared norms. Dividing by sqrt(|q|^2 |g|^2) makes d_ij exactly 0 when the
// two patches are the same vector.
std::vector<double> squared_norms_or_throw(const Matrix& m, const char* side) {
  std::vector<double> norms(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    norms[i] = kernels::dot(m.row(i), m.row(i));
    if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) {
      throw DataError(std::string("zero-norm ") + side + " patch at index " +
                      std::to_string(i));
    }
  }
  return norms;
}

}  // namespace

GroundDistanceMatrix ground_distance(const Matrix& q_patches,
                                     const Matrix& g_patches) {
  if (q_patches.rows() != g_patches.rows() || q_patches.cols() != g_patches.cols()) {
    throw DataError("patch sets differ in shape");
  }
  const auto qn = squared_norms_or_throw(q_patches, "query");
  const auto gn = squared_norms_or_throw(g_patches, "gallery");
  const std::size_t n = q_patches.rows();
  GroundDistanceMatrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double cos = kernels::dot(q_patches.row(i), g_patches.row(j)) / std::sqrt(qn[i] * gn[j]);
      // Rounding can push |cos| slightly past one.
      d(i, j) = std::clamp(1.0 - cos, 0.0, 2.0);
    }
  }
  return d;
}

}  // namespace dfemd
