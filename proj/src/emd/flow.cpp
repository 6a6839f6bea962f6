#include <algorithm>

#include "dfemd/emd.hpp"
#include "dfemd/error.hpp"

namespace dfemd {

std::vector<double> normalize_flow(const TransportPlan& plan, std::size_t patch_index) {
  if (patch_index >= plan.flow.rows()) {
    throw UsageError("patch index " + std::to_string(patch_index) + " out of range");
  }
  auto row = plan.flow.row(patch_index);
  const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
  std::vector<double> out(row.size(), 0.0);
  const double range = *hi - *lo;
  if (range <= 0.0) return out;
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - *lo) / range;
  return out;
}

std::vector<std::size_t> flow_argmax(const TransportPlan& plan) {
  std::vector<std::size_t> out(plan.flow.rows());
  for (std::size_t i = 0; i < plan.flow.rows(); ++i) {
    auto row = plan.flow.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace dfemd
