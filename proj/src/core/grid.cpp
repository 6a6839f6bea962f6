#include "dfemd/grid.hpp"

#include <string>
#include <vector>

#include "dfemd/error.hpp"

namespace dfemd {

EmbeddedItem pool_grid(const EmbeddedItem& item, std::uint32_t factor) {
  const PatchGrid& in = item.patch_grid;
  if (factor == 0 || in.height() % factor != 0 || in.width() % factor != 0) {
    throw UsageError("pool factor " + std::to_string(factor) + " does not divide " +
                     std::to_string(in.height()) + "x" + std::to_string(in.width()) +
                     " grid");
  }
  if (factor == 1) return item;

  const std::uint32_t out_h = in.height() / factor;
  const std::uint32_t out_w = in.width() / factor;
  const std::uint32_t channels = in.channels();
  const double inv_area = 1.0 / (static_cast<double>(factor) * factor);

  PatchGrid out(out_h, out_w, channels);
  std::vector<double> acc(channels);
  for (std::uint32_t r = 0; r < out_h; ++r) {
    for (std::uint32_t c = 0; c < out_w; ++c) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::uint32_t dr = 0; dr < factor; ++dr) {
        for (std::uint32_t dc = 0; dc < factor; ++dc) {
          auto src = in.patch(r * factor + dr, c * factor + dc);
          for (std::uint32_t ch = 0; ch < channels; ++ch) acc[ch] += src[ch];
        }
      }
      auto dst = out.patch(r, c);
      for (std::uint32_t ch = 0; ch < channels; ++ch) {
        dst[ch] = static_cast<float>(acc[ch] * inv_area);
      }
    }
  }

  EmbeddedItem pooled;
  pooled.item_id = item.item_id;
  pooled.identity = item.identity;
  pooled.image_embedding = item.image_embedding;
  pooled.patch_grid = std::move(out);
  pooled.source_meta = item.source_meta;
  return pooled;
}

}  // namespace dfemd
