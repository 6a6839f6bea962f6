#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dfemd/types.hpp"

namespace dfemd::synth {

// Seeded generator with a platform-independent mapping from engine output to
// uniform and normal variates (std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::vector<float> random_unit_vector(Rng& rng, std::uint32_t dim);
std::vector<float> random_vector(Rng& rng, std::uint32_t dim);

// Item with Gaussian entries everywhere.
EmbeddedItem random_item(Rng& rng, std::string item_id, std::string identity,
                         const Dims& dims);

// Mean of all patch vectors (length C).
std::vector<float> mean_patch(const PatchGrid& grid);

struct OcclusionConfig {
  std::size_t identities = 64;
  std::size_t items_per_identity = 3;
  std::uint32_t height = 4;
  std::uint32_t width = 4;
  std::uint32_t channels = 32;
  // Per-item Gaussian perturbation of the identity prototype, relative to a
  // unit patch.
  double noise = 0.6;
  // Occluded patches are replaced by random vectors of this norm.
  double occluder_norm = 1e-6;
  std::uint64_t seed = 0;
};

struct OcclusionFixture {
  std::vector<EmbeddedItem> gallery;
  // One per gallery item, sharing its item_id and identity.
  std::vector<EmbeddedItem> queries;
};

// Identities are random unit-patch prototype grids; each gallery item is its
// prototype plus noise, renormalized per patch, with image embedding = mean
// patch. Each query is a gallery item whose first half of patches (row-major)
// is occluded, with the image embedding recomputed.
OcclusionFixture make_occlusion_fixture(const OcclusionConfig& cfg);

// Copy of `item` with the first half of its patches (row-major) replaced by
// near-zero occluder vectors and the image embedding recomputed.
EmbeddedItem occlude_half(const EmbeddedItem& item, Rng& rng, double occluder_norm);

// `count` keypoints per item, jittered around a fixed face-like layout.
std::vector<LandmarkSet> make_landmarks(const std::vector<EmbeddedItem>& items, Rng& rng,
                                        std::size_t count = 68);

}  // namespace dfemd::synth
