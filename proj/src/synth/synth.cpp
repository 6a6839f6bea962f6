#include "dfemd/synth.hpp"

#include <algorithm>
#include <numbers>

namespace dfemd::synth {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; 1 - u keeps the logarithm finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::vector<float> random_vector(Rng& rng, std::uint32_t dim) {
  std::vector<float> v(dim);
  for (float& x : v) x = static_cast<float>(rng.normal());
  return v;
}

std::vector<float> random_unit_vector(Rng& rng, std::uint32_t dim) {
  std::vector<double> v(dim);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<float> out(dim);
  for (std::uint32_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] * inv);
  return out;
}

EmbeddedItem random_item(Rng& rng, std::string item_id, std::string identity,
                         const Dims& dims) {
  EmbeddedItem item;
  item.item_id = std::move(item_id);
  item.identity = std::move(identity);
  item.image_embedding = random_vector(rng, dims.image_dim);
  item.patch_grid = PatchGrid(dims.height, dims.width, dims.channels,
                              random_vector(rng, static_cast<std::uint32_t>(dims.grid_size())));
  return item;
}

std::vector<float> mean_patch(const PatchGrid& grid) {
  std::vector<double> acc(grid.channels(), 0.0);
  for (std::size_t p = 0; p < grid.num_patches(); ++p) {
    auto patch = grid.patch(p);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += patch[c];
  }
  std::vector<float> out(acc.size());
  for (std::size_t c = 0; c < acc.size(); ++c) {
    out[c] = static_cast<float>(acc[c] / static_cast<double>(grid.num_patches()));
  }
  return out;
}

EmbeddedItem occlude_half(const EmbeddedItem& item, Rng& rng, double occluder_norm) {
  EmbeddedItem out = item;
  const std::size_t occluded = out.patch_grid.num_patches() / 2;
  for (std::size_t p = 0; p < occluded; ++p) {
    const auto v = random_unit_vector(rng, out.patch_grid.channels());
    auto patch = out.patch_grid.patch(p);
    for (std::size_t c = 0; c < patch.size(); ++c) {
      patch[c] = static_cast<float>(v[c] * occluder_norm);
    }
  }
  out.image_embedding = mean_patch(out.patch_grid);
  return out;
}

OcclusionFixture make_occlusion_fixture(const OcclusionConfig& cfg) {
  Rng rng(cfg.seed);
  const std::size_t n = std::size_t{cfg.height} * cfg.width;
  OcclusionFixture fx;
  for (std::size_t id = 0; id < cfg.identities; ++id) {
    std::vector<std::vector<float>> prototype(n);
    for (auto& p : prototype) p = random_unit_vector(rng, cfg.channels);
    const std::string identity = "id" + std::to_string(id);
    for (std::size_t k = 0; k < cfg.items_per_identity; ++k) {
      EmbeddedItem item;
      item.item_id = identity + "_" + std::to_string(k);
      item.identity = identity;
      item.patch_grid = PatchGrid(cfg.height, cfg.width, cfg.channels);
      for (std::size_t p = 0; p < n; ++p) {
        std::vector<double> v(cfg.channels);
        double norm2 = 0.0;
        for (std::uint32_t c = 0; c < cfg.channels; ++c) {
          v[c] = prototype[p][c] + cfg.noise * rng.normal() / std::sqrt(static_cast<double>(cfg.channels));
          norm2 += v[c] * v[c];
        }
        const double inv = 1.0 / std::sqrt(norm2);
        auto patch = item.patch_grid.patch(p);
        for (std::uint32_t c = 0; c < cfg.channels; ++c) {
          patch[c] = static_cast<float>(v[c] * inv);
        }
      }
      item.image_embedding = mean_patch(item.patch_grid);
      fx.gallery.push_back(std::move(item));
    }
  }
  for (const EmbeddedItem& item : fx.gallery) {
    fx.queries.push_back(occlude_half(item, rng, cfg.occluder_norm));
  }
  return fx;
}

std::vector<LandmarkSet> make_landmarks(const std::vector<EmbeddedItem>& items, Rng& rng,
                                        std::size_t count) {
  std::vector<LandmarkSet> out;
  out.reserve(items.size());
  for (const EmbeddedItem& item : items) {
    LandmarkSet set;
    set.item_id = item.item_id;
    for (std::size_t k = 0; k < count; ++k) {
      // Points on an ellipse around the face centre, denser near the middle.
      const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
      const double radius = 0.1 + 0.25 * static_cast<double>(k % 4) / 3.0;
      const double x = 0.5 + radius * std::cos(t) + 0.02 * rng.normal();
      const double y = 0.55 + radius * std::sin(t) + 0.02 * rng.normal();
      set.keypoints.push_back({std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0)});
    }
    out.push_back(std::move(set));
  }
  return out;
}

}  // namespace dfemd::synth
