#include "dfemd/metrics.hpp"

#include <algorithm>

#include "dfemd/error.hpp"

namespace dfemd {

QueryMetrics evaluate_query(const RankingResult& result, const GalleryIndex& gallery) {
  QueryMetrics m;
  m.query_id = result.query_id;

  std::size_t r = gallery.count_identity(result.query_identity);
  const EmbeddedItem* self = gallery.find(result.query_id);
  if (self != nullptr && self->identity == result.query_identity) --r;
  if (r == 0) {
    throw DataError("query '" + result.query_id + "': identity '" +
                    result.query_identity + "' absent from gallery");
  }
  m.r = r;

  std::size_t hits = 0;
  double ap_sum = 0.0;
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    if (result.candidates[i].identity != result.query_identity) continue;
    if (m.rank_of_first_hit == 0) m.rank_of_first_hit = i + 1;
    if (i < r) {
      ++hits;
      ap_sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  m.r_hits = hits;
  m.p_at_1 = m.rank_of_first_hit == 1 ? 1.0 : 0.0;
  m.r_precision = static_cast<double>(hits) / static_cast<double>(r);
  m.map_at_r = ap_sum / static_cast<double>(r);
  return m;
}

EvalReport evaluate(std::span<const RankingResult> results, const GalleryIndex& gallery) {
  EvalReport report;
  report.per_query.reserve(results.size());
  for (const RankingResult& result : results) {
    report.per_query.push_back(evaluate_query(result, gallery));
  }
  if (report.per_query.empty()) return report;
  for (const QueryMetrics& q : report.per_query) {
    report.p_at_1 += q.p_at_1;
    report.r_precision += q.r_precision;
    report.map_at_r += q.map_at_r;
  }
  const double n = static_cast<double>(report.per_query.size());
  report.p_at_1 /= n;
  report.r_precision /= n;
  report.map_at_r /= n;
  return report;
}

}  // namespace dfemd
