#include "dfemd/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "dfemd/error.hpp"

namespace dfemd {

namespace {

constexpr std::size_t kHeaderSize = sizeof(kArchiveMagic) + 6 * sizeof(std::uint32_t);

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8)
      out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void f32s(const std::vector<float>& values) {
    for (float f : values) u32(std::bit_cast<std::uint32_t>(f));
  }
  void str16(const std::string& s, const char* what) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw DataError(std::string(what) + " longer than 65535 bytes");
    }
    u16(static_cast<std::uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t remaining() const { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw DataError(std::string("truncated ") + what);
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str16(const char* what) {
    const std::uint16_t len = u16(what);
    need(len, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  std::vector<float> f32s(std::size_t n, const char* what) {
    need(n * 4, what);
    std::vector<float> values(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= std::uint32_t{in_[pos_ + b]} << (8 * b);
      values[i] = std::bit_cast<float>(bits);
      pos_ += 4;
    }
    return values;
  }
  std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_archive(std::span<const EmbeddedItem> items) {
  if (items.empty()) throw DataError("cannot write an empty archive");
  const Dims dims = items.front().dims();
  for (const EmbeddedItem& item : items) {
    if (item.dims() != dims) {
      throw DataError("inconsistent grid dims at item '" + item.item_id + "'");
    }
    validate_item(item);
  }
  if (items.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError("too many items for one archive");
  }

  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + items.size() * (4 + (dims.image_dim + dims.grid_size()) * 4));
  out.insert(out.end(), std::begin(kArchiveMagic), std::end(kArchiveMagic));
  Writer w(out);
  w.u32(GalleryIndex::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(items.size()));
  w.u32(dims.image_dim);
  w.u32(dims.height);
  w.u32(dims.width);
  w.u32(dims.channels);
  for (const EmbeddedItem& item : items) {
    w.str16(item.item_id, "item_id");
    w.str16(item.identity, "identity");
    w.f32s(item.image_embedding);
    w.f32s(item.patch_grid.values());
  }
  return out;
}

GalleryIndex decode_archive(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.remaining() < sizeof(kArchiveMagic) ||
      std::memcmp(r.bytes(sizeof(kArchiveMagic), "magic").data(), kArchiveMagic,
                  sizeof(kArchiveMagic)) != 0) {
    throw DataError("bad magic: not a DFEMD1 archive");
  }
  const std::uint32_t version = r.u32("header");
  if (version != GalleryIndex::kFormatVersion) {
    throw DataError("unsupported archive version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32("header");
  Dims dims;
  dims.image_dim = r.u32("header");
  dims.height = r.u32("header");
  dims.width = r.u32("header");
  dims.channels = r.u32("header");
  if (dims.image_dim == 0 || dims.height == 0 || dims.width == 0 || dims.channels == 0) {
    throw DataError("archive header has a zero dimension");
  }

  // Each record needs at least its two length fields plus the float payload;
  // a count that cannot fit means a corrupted header.
  const std::size_t min_record = 4 + (dims.image_dim + dims.grid_size()) * 4;
  if (count == 0) throw DataError("archive holds no items");
  if (r.remaining() / min_record < count) throw DataError("truncated record");

  std::vector<EmbeddedItem> items;
  items.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    EmbeddedItem item;
    item.item_id = r.str16("record");
    item.identity = r.str16("record");
    item.image_embedding = r.f32s(dims.image_dim, "record");
    item.patch_grid = PatchGrid(dims.height, dims.width, dims.channels,
                                r.f32s(dims.grid_size(), "record"));
    items.push_back(std::move(item));
  }
  if (r.remaining() != 0) {
    throw DataError("trailing bytes after " + std::to_string(count) + " records");
  }
  return GalleryIndex(std::move(items), version);
}

void write_archive(std::span<const EmbeddedItem> items,
                   const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_archive(items);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

GalleryIndex read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open archive '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_archive(bytes);
}

}  // namespace dfemd
