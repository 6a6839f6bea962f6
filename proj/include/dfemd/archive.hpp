#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dfemd/types.hpp"

namespace dfemd {

// Binary embedding archive, little-endian:
//   "DFEMD1" | u32 version | u32 count | u32 D_img | u32 H | u32 W | u32 C
//   per item: u16 len + id | u16 len + identity | D_img f32 | H*W*C f32
inline constexpr char kArchiveMagic[6] = {'D', 'F', 'E', 'M', 'D', '1'};

std::vector<std::uint8_t> encode_archive(std::span<const EmbeddedItem> items);
GalleryIndex decode_archive(std::span<const std::uint8_t> bytes);

void write_archive(std::span<const EmbeddedItem> items,
                   const std::filesystem::path& path);
GalleryIndex read_archive(const std::filesystem::path& path);

}  // namespace dfemd
