#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dfemd/emd.hpp"
#include "dfemd/types.hpp"
#include "dfemd/weighting.hpp"

namespace dfemd {

enum class Stage { Stage1Only, TwoStage, EmdStage1 };
enum class EmdSolver { Sinkhorn, Exact };

std::string_view to_string(Stage stage);
std::string_view to_string(EmdSolver solver);
EmdSolver parse_solver(std::string_view name);

struct Candidate {
  std::string item_id;
  std::string identity;
  double theta_cosine = 0.0;
  std::optional<double> theta_emd;
  std::optional<double> theta_blended;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Gallery items ranked for one query. A gallery item whose item_id equals the
// query's item_id is the query itself and never appears as a candidate.
struct RankingResult {
  std::string query_id;
  std::string query_identity;
  std::vector<Candidate> candidates;
  Stage stage = Stage::Stage1Only;

  friend bool operator==(const RankingResult&, const RankingResult&) = default;
};

struct PipelineConfig {
  std::size_t k = 100;
  double alpha = 0.7;
  WeightScheme weighting{Scheme::APC, nullptr};
  SinkhornConfig sinkhorn;
  std::uint32_t pool_factor = 1;
  EmdSolver solver = EmdSolver::Sinkhorn;

  // Throws UsageError on k == 0, alpha outside [0,1], pool_factor == 0 or a
  // bad Sinkhorn config.
  void validate() const;
};

// 1 - cos(a, b). Throws DataError when either vector has zero norm.
double cosine_distance(std::span<const float> a, std::span<const float> b);

// Whole gallery sorted ascending by image-level cosine distance, ties by
// item_id.
RankingResult stage1_rank(const EmbeddedItem& query, const GalleryIndex& gallery);

// Patch-level EMD between two items under cfg (pooling, weighting, solver).
TransportPlan pair_emd(const EmbeddedItem& query, const EmbeddedItem& candidate,
                       const PipelineConfig& cfg);

// Re-sorts the first min(k, n) Stage-1 candidates by
// alpha * theta_emd + (1 - alpha) * theta_cosine; the tail keeps Stage-1
// order. Solver and weighting errors are rethrown with the candidate id.
RankingResult rerank(const EmbeddedItem& query, const RankingResult& stage1,
                     const GalleryIndex& gallery, const PipelineConfig& cfg);

// Whole gallery sorted by pure patch-level EMD.
RankingResult emd_stage1_rank(const EmbeddedItem& query,
                              const GalleryIndex& gallery,
                              const PipelineConfig& cfg);

// 1 when any of the top-k Stage-1 candidates shares the query identity.
double max_precision_at_k(const RankingResult& stage1, const GalleryIndex& gallery,
                          std::size_t k);

}  // namespace dfemd
