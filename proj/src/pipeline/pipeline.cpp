#include "dfemd/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "dfemd/error.hpp"
#include "dfemd/grid.hpp"
#include "dfemd/kernels/kernels.hpp"

namespace dfemd {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Stage1Only: return "stage1";
    case Stage::TwoStage: return "two-stage";
    case Stage::EmdStage1: return "emd-stage1";
  }
  return "unknown";
}

std::string_view to_string(EmdSolver solver) {
  return solver == EmdSolver::Exact ? "exact" : "sinkhorn";
}

EmdSolver parse_solver(std::string_view name) {
  if (name == "sinkhorn") return EmdSolver::Sinkhorn;
  if (name == "exact") return EmdSolver::Exact;
  throw UsageError("unknown solver '" + std::string(name) + "' (expected sinkhorn|exact)");
}

void PipelineConfig::validate() const {
  if (k == 0) throw UsageError("k must be at least 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
  if (pool_factor == 0) throw UsageError("pool_factor must be at least 1");
  sinkhorn.validate();
}

double cosine_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw DataError("image embedding lengths differ");
  const double na = kernels::dot(a, a);
  const double nb = kernels::dot(b, b);
  if (!(na > 0.0) || !(nb > 0.0)) throw DataError("zero-norm image embedding");
  return 1.0 - kernels::dot(a, b) / std::sqrt(na * nb);
}

namespace {

// Orders by the given distance, then by item_id.
template <typename Key>
void sort_candidates(std::vector<Candidate>::iterator first,
                     std::vector<Candidate>::iterator last, Key key) {
  std::sort(first, last, [&](const Candidate& x, const Candidate& y) {
    const double kx = key(x);
    const double ky = key(y);
    if (kx != ky) return kx < ky;
    return x.item_id < y.item_id;
  });
}

void check_dims(const EmbeddedItem& query, const GalleryIndex& gallery) {
  if (gallery.empty()) throw DataError("empty gallery");
  if (query.dims() != gallery.dims()) {
    throw DataError("query '" + query.item_id + "' dims do not match the gallery");
  }
}

// Every gallery item except the query itself, with theta_cosine filled in.
std::vector<Candidate> cosine_candidates(const EmbeddedItem& query,
                                         const GalleryIndex& gallery) {
  std::span<const float> qe(query.image_embedding);
  const double qn = kernels::dot(qe, qe);
  if (!(qn > 0.0)) {
    throw DataError("zero-norm image embedding for query '" + query.item_id + "'");
  }
  std::vector<Candidate> out;
  out.reserve(gallery.size());
  for (const EmbeddedItem& item : gallery.items()) {
    if (item.item_id == query.item_id) continue;
    std::span<const float> ge(item.image_embedding);
    const double gn = kernels::dot(ge, ge);
    if (!(gn > 0.0)) {
      throw DataError("zero-norm image embedding for item '" + item.item_id + "'");
    }
    Candidate c;
    c.item_id = item.item_id;
    c.identity = item.identity;
    c.theta_cosine = 1.0 - kernels::dot(qe, ge) / std::sqrt(qn * gn);
    out.push_back(std::move(c));
  }
  return out;
}

TransportPlan emd_of_pooled(const EmbeddedItem& pooled_query,
                            const EmbeddedItem& pooled_candidate,
                            const PipelineConfig& cfg) {
  auto [q, g] = weigh_pair(pooled_query, pooled_candidate, cfg.weighting);
  if (cfg.solver == EmdSolver::Exact) return exact_emd(q, g);
  return solve_emd(q, g, cfg.sinkhorn);
}

double candidate_emd(const EmbeddedItem& pooled_query, const Candidate& cand,
                     const GalleryIndex& gallery, const PipelineConfig& cfg) {
  const EmbeddedItem* item = gallery.find(cand.item_id);
  if (item == nullptr) {
    throw DataError("candidate '" + cand.item_id + "' not found in the gallery");
  }
  try {
    return emd_of_pooled(pooled_query, pool_grid(*item, cfg.pool_factor), cfg).cost;
  } catch (const Error& e) {
    rethrow_with_context(e, "candidate '" + cand.item_id + "': ");
  }
}

}  // namespace

RankingResult stage1_rank(const EmbeddedItem& query, const GalleryIndex& gallery) {
  check_dims(query, gallery);
  RankingResult result;
  result.query_id = query.item_id;
  result.query_identity = query.identity;
  result.stage = Stage::Stage1Only;
  result.candidates = cosine_candidates(query, gallery);
  sort_candidates(result.candidates.begin(), result.candidates.end(),
                  [](const Candidate& c) { return c.theta_cosine; });
  return result;
}

TransportPlan pair_emd(const EmbeddedItem& query, const EmbeddedItem& candidate,
                       const PipelineConfig& cfg) {
  cfg.validate();
  return emd_of_pooled(pool_grid(query, cfg.pool_factor),
                       pool_grid(candidate, cfg.pool_factor), cfg);
}

RankingResult rerank(const EmbeddedItem& query, const RankingResult& stage1,
                     const GalleryIndex& gallery, const PipelineConfig& cfg) {
  cfg.validate();
  check_dims(query, gallery);
  if (stage1.query_id != query.item_id) {
    throw UsageError("stage-1 ranking belongs to query '" + stage1.query_id + "'");
  }
  const EmbeddedItem pooled_query = pool_grid(query, cfg.pool_factor);

  RankingResult result = stage1;
  result.stage = Stage::TwoStage;
  const std::size_t top = std::min(cfg.k, result.candidates.size());
  for (std::size_t i = 0; i < top; ++i) {
    Candidate& cand = result.candidates[i];
    const double emd = candidate_emd(pooled_query, cand, gallery, cfg);
    cand.theta_emd = emd;
    cand.theta_blended = cfg.alpha * emd + (1.0 - cfg.alpha) * cand.theta_cosine;
  }
  sort_candidates(result.candidates.begin(),
                  result.candidates.begin() + static_cast<std::ptrdiff_t>(top),
                  [](const Candidate& c) { return *c.theta_blended; });
  return result;
}

RankingResult emd_stage1_rank(const EmbeddedItem& query, const GalleryIndex& gallery,
                              const PipelineConfig& cfg) {
  cfg.validate();
  check_dims(query, gallery);
  const EmbeddedItem pooled_query = pool_grid(query, cfg.pool_factor);

  RankingResult result;
  result.query_id = query.item_id;
  result.query_identity = query.identity;
  result.stage = Stage::EmdStage1;
  result.candidates = cosine_candidates(query, gallery);
  for (Candidate& cand : result.candidates) {
    cand.theta_emd = candidate_emd(pooled_query, cand, gallery, cfg);
  }
  sort_candidates(result.candidates.begin(), result.candidates.end(),
                  [](const Candidate& c) { return *c.theta_emd; });
  return result;
}

double max_precision_at_k(const RankingResult& stage1, const GalleryIndex& gallery,
                          std::size_t k) {
  if (k == 0) throw UsageError("k must be at least 1");
  const std::size_t top = std::min(k, stage1.candidates.size());
  for (std::size_t i = 0; i < top; ++i) {
    const Candidate& c = stage1.candidates[i];
    const EmbeddedItem* item = gallery.find(c.item_id);
    const std::string& identity = item != nullptr ? item->identity : c.identity;
    if (identity == stage1.query_identity) return 1.0;
  }
  return 0.0;
}

}  // namespace dfemd
