#pragma once

#include <cstdint>

#include "dfemd/types.hpp"

namespace dfemd {

// Average-pools each factor x factor block of the patch grid into one patch.
// The image embedding is copied unchanged. Throws UsageError when factor is
// zero or does not divide both H and W.
EmbeddedItem pool_grid(const EmbeddedItem& item, std::uint32_t factor);

}  // namespace dfemd
