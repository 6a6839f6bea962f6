#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dfemd/landmarks.hpp"
#include "dfemd/matrix.hpp"
#include "dfemd/types.hpp"

namespace dfemd {

// N patch embeddings (rows of `patches`) with importance weights that are
// non-negative and sum to one.
struct WeightedFeatureSet {
  Matrix patches;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

// Tolerance on the total-weight-one invariant.
inline constexpr double kWeightSumTolerance = 1e-9;

enum class Scheme { Uniform, APC, CC, SC, LMK };

std::string_view to_string(Scheme scheme);
// Accepts uniform|apc|cc|sc|lmk (case-insensitive). Throws UsageError.
Scheme parse_scheme(std::string_view name);

struct WeightScheme {
  Scheme kind = Scheme::APC;
  // Required for LMK; looked up by item_id. Not owned.
  const LandmarkTable* landmarks = nullptr;
};

// Patch grid converted to an N x C double matrix.
Matrix patch_matrix(const EmbeddedItem& item);

// Scales raw non-negative weights to sum one. An all-zero vector becomes
// uniform 1/N. Throws NumericalError on negative or non-finite input.
std::vector<double> normalize_weights(std::span<const double> raw);

// Raw per-patch landmark counts over an H x W grid of half-open cells in the
// normalized image plane; row index from y, column index from x.
std::vector<double> landmark_counts(const LandmarkSet& set, std::uint32_t height,
                                    std::uint32_t width);

// Returns (query set, gallery set), each normalized to total weight one.
// Throws DataError on grid mismatch, CC with C != D_img, or missing landmarks.
std::pair<WeightedFeatureSet, WeightedFeatureSet> weigh_pair(
    const EmbeddedItem& query, const EmbeddedItem& gallery,
    const WeightScheme& scheme);

}  // namespace dfemd
