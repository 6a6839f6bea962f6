#include <cstdlib>
#include <string_view>

#include "dfemd/kernels/kernels.hpp"

namespace dfemd::kernels {

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> tables{&scalar_table()};
  if (const KernelTable* t = avx2_table()) tables.push_back(t);
  if (const KernelTable* t = neon_table()) tables.push_back(t);
  return tables;
}

namespace {

const KernelTable& select() {
  const auto tables = available_tables();
  if (const char* env = std::getenv("DFEMD_SIMD")) {
    const std::string_view wanted(env);
    if (wanted != "auto") {
      for (const KernelTable* t : tables)
        if (t->name == wanted) return *t;
      // Unknown or unsupported request: fall back to the reference kernels.
      return scalar_table();
    }
  }
  return *tables.back();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace dfemd::kernels
