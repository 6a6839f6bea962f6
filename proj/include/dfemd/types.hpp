#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dfemd {

// Shape shared by every item of a gallery: image embedding length plus the
// H x W x C patch grid.
struct Dims {
  std::uint32_t image_dim = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;

  std::size_t num_patches() const { return std::size_t{height} * width; }
  std::size_t grid_size() const { return num_patches() * channels; }

  friend bool operator==(const Dims&, const Dims&) = default;
};

// H x W grid of C-dimensional patch embeddings, row-major (row, column,
// channel).
class PatchGrid {
 public:
  PatchGrid() = default;
  PatchGrid(std::uint32_t height, std::uint32_t width, std::uint32_t channels);
  PatchGrid(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
            std::vector<float> values);

  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }
  std::uint32_t channels() const { return channels_; }
  std::size_t num_patches() const { return std::size_t{height_} * width_; }

  std::span<const float> patch(std::size_t index) const {
    return {values_.data() + index * channels_, channels_};
  }
  std::span<float> patch(std::size_t index) {
    return {values_.data() + index * channels_, channels_};
  }
  std::span<const float> patch(std::size_t row, std::size_t col) const {
    return patch(row * width_ + col);
  }
  std::span<float> patch(std::size_t row, std::size_t col) {
    return patch(row * width_ + col);
  }

  const std::vector<float>& values() const { return values_; }
  std::vector<float>& values() { return values_; }

 private:
  std::uint32_t height_ = 0;
  std::uint32_t width_ = 0;
  std::uint32_t channels_ = 0;
  std::vector<float> values_;
};

struct EmbeddedItem {
  std::string item_id;
  std::string identity;
  std::vector<float> image_embedding;
  PatchGrid patch_grid;
  // Not persisted by the archive format.
  std::optional<std::string> source_meta;

  Dims dims() const {
    return {static_cast<std::uint32_t>(image_embedding.size()),
            patch_grid.height(), patch_grid.width(), patch_grid.channels()};
  }
};

// Bitwise comparison of every persisted field (item_id, identity, image
// embedding, patch grid). Distinguishes -0.0 from 0.0 and compares NaN
// payloads.
bool bit_equal(const EmbeddedItem& a, const EmbeddedItem& b);

// Throws DataError when dims are zero or any entry is non-finite.
void validate_item(const EmbeddedItem& item);

// Immutable after construction; safe for concurrent reads.
class GalleryIndex {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  GalleryIndex() = default;
  // Validates every item, dimension consistency and id uniqueness.
  explicit GalleryIndex(std::vector<EmbeddedItem> items,
                        std::uint32_t format_version = kFormatVersion);

  const std::vector<EmbeddedItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const EmbeddedItem& operator[](std::size_t i) const { return items_[i]; }
  const Dims& dims() const { return dims_; }
  std::uint32_t format_version() const { return format_version_; }

  // nullptr when absent.
  const EmbeddedItem* find(const std::string& item_id) const;
  std::optional<std::size_t> index_of(const std::string& item_id) const;

  // Number of items carrying `identity`.
  std::size_t count_identity(const std::string& identity) const;

 private:
  std::vector<EmbeddedItem> items_;
  Dims dims_;
  std::uint32_t format_version_ = kFormatVersion;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> identity_counts_;
};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
};

struct LandmarkSet {
  std::string item_id;
  std::vector<Keypoint> keypoints;
};

}  // namespace dfemd
