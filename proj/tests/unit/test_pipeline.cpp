#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "dfemd/error.hpp"
#include "dfemd/grid.hpp"
#include "dfemd/pipeline.hpp"
#include "test_support.hpp"

namespace dfemd {
namespace {

std::vector<std::string> ids(const RankingResult& r) {
  std::vector<std::string> out;
  for (const Candidate& c : r.candidates) out.push_back(c.item_id);
  return out;
}

std::vector<std::string> top_ids(const RankingResult& r, std::size_t k) {
  auto all = ids(r);
  all.resize(std::min(k, all.size()));
  return all;
}

EmbeddedItem angled_item(std::string id, double degrees) {
  const double t = degrees * std::numbers::pi / 180.0;
  return testing::make_item(id, id, {static_cast<float>(std::cos(t)), static_cast<float>(std::sin(t))},
                            1, 1, 2, {1.0f, 0.0f});
}

TEST(PipelineConfig, Defaults) {
  const PipelineConfig cfg;
  EXPECT_EQ(cfg.k, 100u);
  EXPECT_EQ(cfg.alpha, 0.7);
  EXPECT_EQ(cfg.weighting.kind, Scheme::APC);
  EXPECT_EQ(cfg.pool_factor, 1u);
  EXPECT_EQ(cfg.solver, EmdSolver::Sinkhorn);
  EXPECT_EQ(cfg.sinkhorn.epsilon, 1e-3);
  EXPECT_EQ(cfg.sinkhorn.tolerance, 1e-6);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Stage1, SmallerAngleRanksFirst) {
  const GalleryIndex gallery({angled_item("b60", 60), angled_item("a30", 30)});
  const RankingResult r = stage1_rank(angled_item("q", 0), gallery);
  EXPECT_EQ(ids(r), (std::vector<std::string>{"a30", "b60"}));
  EXPECT_NEAR(r.candidates[0].theta_cosine, 1.0 - std::cos(std::numbers::pi / 6), 1e-7);
  EXPECT_EQ(r.stage, Stage::Stage1Only);
  EXPECT_FALSE(r.candidates[0].theta_emd.has_value());
}

TEST(Stage1, ExactCopyRanksFirstAndSelfIsExcluded) {
  synth::Rng rng(50);
  auto items = testing::random_gallery(rng, 10, 2, {8, 2, 2, 8});
  EmbeddedItem copy = items[7];
  copy.item_id = "copy";
  items.push_back(copy);
  const GalleryIndex gallery(items);
  const RankingResult r = stage1_rank(items[7], gallery);
  EXPECT_EQ(r.candidates.size(), items.size() - 1);
  EXPECT_EQ(r.candidates[0].item_id, "copy");
  EXPECT_EQ(r.candidates[0].theta_cosine, 0.0);
  for (const Candidate& c : r.candidates) EXPECT_NE(c.item_id, items[7].item_id);
}

TEST(Stage1, MatchesIndependentSort) {
  synth::Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const auto items = testing::random_gallery(rng, 25, 2, {16, 1, 1, 4});
    const GalleryIndex gallery(items);
    const auto query = synth::random_item(rng, "query", "p0", {16, 1, 1, 4});
    std::vector<std::pair<double, std::string>> oracle;
    for (const auto& item : items) {
      double dot = 0, na = 0, nb = 0;
      for (std::size_t i = 0; i < 16; ++i) {
        dot += double{query.image_embedding[i]} * item.image_embedding[i];
        na += double{query.image_embedding[i]} * query.image_embedding[i];
        nb += double{item.image_embedding[i]} * item.image_embedding[i];
      }
      oracle.emplace_back(1.0 - dot / std::sqrt(na * nb), item.item_id);
    }
    std::sort(oracle.begin(), oracle.end());
    const RankingResult r = stage1_rank(query, gallery);
    ASSERT_EQ(r.candidates.size(), 50u);
    for (std::size_t i = 0; i < 50; ++i) {
      EXPECT_EQ(r.candidates[i].item_id, oracle[i].second);
      EXPECT_NEAR(r.candidates[i].theta_cosine, oracle[i].first, 1e-12);
    }
  }
}

TEST(Stage1, TiesBrokenByItemId) {
  std::vector<EmbeddedItem> items;
  for (const char* id : {"d", "b", "c", "a"}) items.push_back(angled_item(id, 45));
  const RankingResult r = stage1_rank(angled_item("q", 0), GalleryIndex(items));
  EXPECT_EQ(ids(r), (std::vector<std::string>{"a", "b", "c", "d"}));
}

TEST(Stage1, ZeroNormAndDimMismatch) {
  const GalleryIndex gallery({angled_item("a", 10)});
  auto zero = angled_item("q", 0);
  zero.image_embedding = {0.0f, 0.0f};
  EXPECT_THROW(stage1_rank(zero, gallery), DataError);
  auto wide = testing::make_item("q", "q", {1, 0, 0}, 1, 1, 2, {1, 0});
  EXPECT_THROW(stage1_rank(wide, gallery), DataError);
}

struct RerankFixture {
  std::vector<EmbeddedItem> items;
  GalleryIndex gallery;
  EmbeddedItem query;
};

RerankFixture random_fixture(synth::Rng& rng, std::size_t n_items, const Dims& dims) {
  RerankFixture f;
  f.items = testing::random_gallery(rng, n_items / 2, 2, dims);
  f.gallery = GalleryIndex(f.items);
  f.query = synth::random_item(rng, "query", "p0", dims);
  return f;
}

TEST(Rerank, AlphaZeroKeepsStage1Order) {
  synth::Rng rng(52);
  const auto f = random_fixture(rng, 40, {8, 2, 2, 8});
  const RankingResult s1 = stage1_rank(f.query, f.gallery);
  PipelineConfig cfg;
  cfg.alpha = 0.0;
  cfg.k = 15;
  const RankingResult r = rerank(f.query, s1, f.gallery, cfg);
  EXPECT_EQ(ids(r), ids(s1));
  EXPECT_EQ(r.stage, Stage::TwoStage);
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    EXPECT_EQ(r.candidates[i].theta_emd.has_value(), i < 15);
  }
}

TEST(Rerank, AlphaOneSortsTopKByEmd) {
  synth::Rng rng(53);
  const auto f = random_fixture(rng, 40, {8, 2, 2, 8});
  const RankingResult s1 = stage1_rank(f.query, f.gallery);
  PipelineConfig cfg;
  cfg.alpha = 1.0;
  cfg.k = 12;
  const RankingResult r = rerank(f.query, s1, f.gallery, cfg);
  std::vector<std::pair<double, std::string>> oracle;
  for (std::size_t i = 0; i < 12; ++i) {
    const EmbeddedItem& item = *f.gallery.find(s1.candidates[i].item_id);
    oracle.emplace_back(pair_emd(f.query, item, cfg).cost, item.item_id);
  }
  std::sort(oracle.begin(), oracle.end());
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(r.candidates[i].item_id, oracle[i].second);
    EXPECT_EQ(*r.candidates[i].theta_emd, oracle[i].first);
    EXPECT_EQ(*r.candidates[i].theta_blended, oracle[i].first);
  }
  // The tail keeps Stage-1 order.
  for (std::size_t i = 12; i < r.candidates.size(); ++i) {
    EXPECT_EQ(r.candidates[i], s1.candidates[i]);
  }
}

TEST(Rerank, BlendFollowsFormula) {
  synth::Rng rng(54);
  const auto f = random_fixture(rng, 20, {8, 2, 2, 8});
  const RankingResult s1 = stage1_rank(f.query, f.gallery);
  PipelineConfig cfg;
  cfg.k = 20;
  const RankingResult r = rerank(f.query, s1, f.gallery, cfg);
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    const Candidate& c = r.candidates[i];
    EXPECT_EQ(*c.theta_blended, cfg.alpha * *c.theta_emd + (1.0 - cfg.alpha) * c.theta_cosine);
    if (i > 0) EXPECT_LE(*r.candidates[i - 1].theta_blended, *c.theta_blended);
  }
}

TEST(Rerank, PreservesTopKMultiset) {
  synth::Rng rng(55);
  const auto f = random_fixture(rng, 30, {4, 2, 2, 4});
  const RankingResult s1 = stage1_rank(f.query, f.gallery);
  LandmarkTable landmarks;
  std::vector<EmbeddedItem> all = f.items;
  all.push_back(f.query);
  for (const auto& set : synth::make_landmarks(all, rng)) landmarks[set.item_id] = set;
  for (double alpha : {0.0, 0.3, 0.7, 1.0}) {
    for (std::size_t k : {1, 5, 29, 100}) {
      for (Scheme s : {Scheme::Uniform, Scheme::APC, Scheme::CC, Scheme::SC, Scheme::LMK}) {
        PipelineConfig cfg;
        cfg.alpha = alpha;
        cfg.k = k;
        cfg.weighting = {s, &landmarks};
        const RankingResult r = rerank(f.query, s1, f.gallery, cfg);
        auto a = top_ids(s1, k), b = top_ids(r, k);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        EXPECT_EQ(a, b);
        EXPECT_EQ(r.candidates.size(), s1.candidates.size());
      }
    }
  }
}

TEST(Rerank, ScaleInvariantUnderScAndUniform) {
  synth::Rng rng(56);
  const auto f = random_fixture(rng, 20, {8, 2, 2, 8});
  auto scaled_items = f.items;
  for (auto& item : scaled_items) {
    for (float& v : item.patch_grid.values()) v *= 4.0f;
    for (float& v : item.image_embedding) v *= 4.0f;
  }
  auto scaled_query = f.query;
  for (float& v : scaled_query.patch_grid.values()) v *= 4.0f;
  for (float& v : scaled_query.image_embedding) v *= 4.0f;
  const GalleryIndex scaled(scaled_items);
  for (Scheme s : {Scheme::SC, Scheme::Uniform}) {
    PipelineConfig cfg;
    cfg.k = 20;
    cfg.weighting = {s};
    const auto a = rerank(f.query, stage1_rank(f.query, f.gallery), f.gallery, cfg);
    const auto b = rerank(scaled_query, stage1_rank(scaled_query, scaled), scaled, cfg);
    EXPECT_EQ(ids(a), ids(b));
  }
}

TEST(Rerank, OcclusionRarelyHurtsTrueIdentityRank) {
  std::size_t trials = 0, improved_or_equal = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    synth::OcclusionConfig oc;
    oc.identities = 16;
    oc.seed = 100 + seed;
    const auto fx = synth::make_occlusion_fixture(oc);
    const GalleryIndex gallery(fx.gallery);
    PipelineConfig cfg;
    cfg.k = 10;
    for (const EmbeddedItem& q : fx.queries) {
      const RankingResult s1 = stage1_rank(q, gallery);
      const RankingResult r = rerank(q, s1, gallery, cfg);
      auto first_hit = [&](const RankingResult& rr) {
        for (std::size_t i = 0; i < rr.candidates.size(); ++i)
          if (rr.candidates[i].identity == q.identity) return i;
        return rr.candidates.size();
      };
      ++trials;
      if (first_hit(r) <= first_hit(s1)) ++improved_or_equal;
    }
  }
  EXPECT_GE(static_cast<double>(improved_or_equal), 0.95 * static_cast<double>(trials))
      << improved_or_equal << "/" << trials;
}

TEST(Rerank, ErrorsNameCandidate) {
  synth::Rng rng(57);
  const auto f = random_fixture(rng, 6, {4, 2, 2, 4});
  PipelineConfig cfg;
  cfg.weighting = {Scheme::LMK, nullptr};
  try {
    rerank(f.query, stage1_rank(f.query, f.gallery), f.gallery, cfg);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("candidate '"), std::string::npos) << e.what();
  }
  RankingResult other = stage1_rank(f.query, f.gallery);
  other.query_id = "someone_else";
  EXPECT_THROW(rerank(f.query, other, f.gallery, PipelineConfig{}), UsageError);
  PipelineConfig bad;
  bad.alpha = 1.5;
  EXPECT_THROW(rerank(f.query, stage1_rank(f.query, f.gallery), f.gallery, bad), UsageError);
}

TEST(Rerank, PoolingMatchesPrePooledItems) {
  synth::Rng rng(58);
  const auto f = random_fixture(rng, 10, {8, 4, 4, 8});
  PipelineConfig cfg;
  cfg.pool_factor = 2;
  std::vector<EmbeddedItem> pooled;
  for (const auto& item : f.items) pooled.push_back(pool_grid(item, 2));
  const GalleryIndex pooled_gallery(pooled);
  const auto pooled_query = pool_grid(f.query, 2);
  PipelineConfig plain;
  const auto a = rerank(f.query, stage1_rank(f.query, f.gallery), f.gallery, cfg);
  const auto b = rerank(pooled_query, stage1_rank(pooled_query, pooled_gallery),
                        pooled_gallery, plain);
  EXPECT_EQ(a, b);
}

TEST(EmdStage1, MatchesPairwiseRecomputation) {
  synth::Rng rng(59);
  const auto f = random_fixture(rng, 10, {8, 2, 3, 8});
  for (EmdSolver solver : {EmdSolver::Sinkhorn, EmdSolver::Exact}) {
    PipelineConfig cfg;
    cfg.solver = solver;
    const RankingResult r = emd_stage1_rank(f.query, f.gallery, cfg);
    EXPECT_EQ(r.stage, Stage::EmdStage1);
    std::vector<std::pair<double, std::string>> oracle;
    for (const auto& item : f.items) oracle.emplace_back(pair_emd(f.query, item, cfg).cost, item.item_id);
    std::sort(oracle.begin(), oracle.end());
    ASSERT_EQ(r.candidates.size(), oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      EXPECT_EQ(r.candidates[i].item_id, oracle[i].second);
      EXPECT_EQ(*r.candidates[i].theta_emd, oracle[i].first);
    }
  }
}

TEST(EmdStage1, ExactCopyRanksFirstUnderExactSolver) {
  synth::Rng rng(60);
  auto f = random_fixture(rng, 10, {8, 2, 2, 8});
  EmbeddedItem copy = f.query;
  copy.item_id = "copy";
  f.items.push_back(copy);
  const GalleryIndex gallery(f.items);
  PipelineConfig cfg;
  cfg.solver = EmdSolver::Exact;
  const RankingResult r = emd_stage1_rank(f.query, gallery, cfg);
  EXPECT_EQ(r.candidates[0].item_id, "copy");
  EXPECT_NEAR(*r.candidates[0].theta_emd, 0.0, 1e-15);
}

TEST(MaxPrecision, HitInsideAndOutsideTopK) {
  synth::Rng rng(61);
  const auto f = random_fixture(rng, 20, {8, 1, 1, 8});
  RankingResult s1 = stage1_rank(f.query, f.gallery);
  std::size_t first = 0;
  while (s1.candidates[first].identity != "p0") ++first;
  EXPECT_EQ(max_precision_at_k(s1, f.gallery, first + 1), 1.0);
  if (first > 0) EXPECT_EQ(max_precision_at_k(s1, f.gallery, first), 0.0);
  EXPECT_THROW(max_precision_at_k(s1, f.gallery, 0), UsageError);
}

TEST(MaxPrecision, MatchesAnyHitRecount) {
  synth::OcclusionConfig oc;
  oc.identities = 20;
  oc.noise = 1.2;
  oc.seed = 9;
  const auto fx = synth::make_occlusion_fixture(oc);
  const GalleryIndex gallery(fx.gallery);
  for (std::size_t k : {1, 3, 10}) {
    double sum = 0.0, recount = 0.0;
    for (const auto& q : fx.queries) {
      const RankingResult s1 = stage1_rank(q, gallery);
      sum += max_precision_at_k(s1, gallery, k);
      bool hit = false;
      for (std::size_t i = 0; i < k && i < s1.candidates.size(); ++i)
        hit = hit || gallery.find(s1.candidates[i].item_id)->identity == q.identity;
      recount += hit ? 1.0 : 0.0;
    }
    EXPECT_EQ(sum, recount) << "k=" << k;
  }
}

}  // namespace
}  // namespace dfemd
