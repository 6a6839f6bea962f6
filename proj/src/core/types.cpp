#include "dfemd/types.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "dfemd/error.hpp"

namespace dfemd {

PatchGrid::PatchGrid(std::uint32_t height, std::uint32_t width,
                     std::uint32_t channels)
    : height_(height),
      width_(width),
      channels_(channels),
      values_(std::size_t{height} * width * channels, 0.0f) {}

PatchGrid::PatchGrid(std::uint32_t height, std::uint32_t width,
                     std::uint32_t channels, std::vector<float> values)
    : height_(height), width_(width), channels_(channels), values_(std::move(values)) {
  if (values_.size() != std::size_t{height} * width * channels) {
    throw DataError("patch grid holds " + std::to_string(values_.size()) +
                    " values, expected " +
                    std::to_string(std::size_t{height} * width * channels));
  }
}

namespace {

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

void require_finite(const std::vector<float>& values, const std::string& what,
                    const std::string& item_id) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("item '" + item_id + "': non-finite value in " + what +
                      " at index " + std::to_string(i));
    }
  }
}

}  // namespace

bool bit_equal(const EmbeddedItem& a, const EmbeddedItem& b) {
  return a.item_id == b.item_id && a.identity == b.identity &&
         a.dims() == b.dims() && same_bits(a.image_embedding, b.image_embedding) &&
         same_bits(a.patch_grid.values(), b.patch_grid.values());
}

void validate_item(const EmbeddedItem& item) {
  const Dims d = item.dims();
  if (d.image_dim == 0 || d.height == 0 || d.width == 0 || d.channels == 0) {
    throw DataError("item '" + item.item_id + "': zero-sized dimension");
  }
  if (item.patch_grid.values().size() != d.grid_size()) {
    throw DataError("item '" + item.item_id + "': patch grid size mismatch");
  }
  require_finite(item.image_embedding, "image embedding", item.item_id);
  require_finite(item.patch_grid.values(), "patch grid", item.item_id);
}

GalleryIndex::GalleryIndex(std::vector<EmbeddedItem> items,
                           std::uint32_t format_version)
    : items_(std::move(items)), format_version_(format_version) {
  if (items_.empty()) throw DataError("empty gallery");
  dims_ = items_.front().dims();
  by_id_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const EmbeddedItem& item = items_[i];
    validate_item(item);
    if (item.dims() != dims_) {
      throw DataError("inconsistent grid dims at item '" + item.item_id + "'");
    }
    if (!by_id_.emplace(item.item_id, i).second) {
      throw DataError("duplicate item_id '" + item.item_id + "'");
    }
    ++identity_counts_[item.identity];
  }
}

const EmbeddedItem* GalleryIndex::find(const std::string& item_id) const {
  auto it = by_id_.find(item_id);
  return it == by_id_.end() ? nullptr : &items_[it->second];
}

std::optional<std::size_t> GalleryIndex::index_of(const std::string& item_id) const {
  auto it = by_id_.find(item_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t GalleryIndex::count_identity(const std::string& identity) const {
  auto it = identity_counts_.find(identity);
  return it == identity_counts_.end() ? 0 : it->second;
}

}  // namespace dfemd
