#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dfemd/pipeline.hpp"
#include "dfemd/types.hpp"

namespace dfemd {

struct QueryMetrics {
  std::string query_id;
  // 1-based rank of the first same-identity candidate; 0 when none.
  std::size_t rank_of_first_hit = 0;
  // Same-identity gallery items, excluding the query itself.
  std::size_t r = 0;
  // Same-identity candidates within the top r.
  std::size_t r_hits = 0;
  double p_at_1 = 0.0;
  double r_precision = 0.0;
  double map_at_r = 0.0;
};

struct EvalReport {
  double p_at_1 = 0.0;
  double r_precision = 0.0;
  double map_at_r = 0.0;
  std::vector<QueryMetrics> per_query;
};

// Metrics of one ranking. Throws DataError when the query identity has no
// other item in the gallery.
QueryMetrics evaluate_query(const RankingResult& result, const GalleryIndex& gallery);

// Means over queries, in [0,1].
EvalReport evaluate(std::span<const RankingResult> results,
                    const GalleryIndex& gallery);

}  // namespace dfemd
