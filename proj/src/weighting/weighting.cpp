#include "dfemd/weighting.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "dfemd/error.hpp"
#include "dfemd/kernels/kernels.hpp"

namespace dfemd {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Uniform: return "uniform";
    case Scheme::APC: return "apc";
    case Scheme::CC: return "cc";
    case Scheme::SC: return "sc";
    case Scheme::LMK: return "lmk";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Scheme s : {Scheme::Uniform, Scheme::APC, Scheme::CC, Scheme::SC, Scheme::LMK}) {
    if (lower == to_string(s)) return s;
  }
  throw UsageError("unknown weighting scheme '" + std::string(name) +
                   "' (expected uniform|apc|cc|sc|lmk)");
}

Matrix patch_matrix(const EmbeddedItem& item) {
  const PatchGrid& grid = item.patch_grid;
  Matrix m(grid.num_patches(), grid.channels());
  const auto& values = grid.values();
  std::copy(values.begin(), values.end(), m.data().begin());
  return m;
}

std::vector<double> normalize_weights(std::span<const double> raw) {
  double total = 0.0;
  for (double w : raw) {
    if (!std::isfinite(w) || w < 0.0) {
      throw NumericalError("raw weight is negative or non-finite");
    }
    total += w;
  }
  std::vector<double> out(raw.size());
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(raw.size()));
    return out;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / total;
  return out;
}

std::vector<double> landmark_counts(const LandmarkSet& set, std::uint32_t height,
                                    std::uint32_t width) {
  std::vector<double> counts(std::size_t{height} * width, 0.0);
  for (const Keypoint& kp : set.keypoints) {
    // Half-open cells: a point on a boundary lands in the larger index; the
    // far edge (coordinate 1) belongs to the last cell.
    const auto row = std::min<std::uint32_t>(
        static_cast<std::uint32_t>(std::floor(kp.y * height)), height - 1);
    const auto col = std::min<std::uint32_t>(
        static_cast<std::uint32_t>(std::floor(kp.x * width)), width - 1);
    counts[std::size_t{row} * width + col] += 1.0;
  }
  return counts;
}

namespace {

std::vector<double> mean_row(const Matrix& m) {
  std::vector<double> mean(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= static_cast<double>(m.rows());
  return mean;
}

// max(0, <p_i, summary>) for every row p_i.
std::vector<double> correlation_weights(const Matrix& patches,
                                        std::span<const double> summary) {
  std::vector<double> raw(patches.rows());
  for (std::size_t i = 0; i < patches.rows(); ++i) {
    raw[i] = std::max(0.0, kernels::dot(patches.row(i), summary));
  }
  return raw;
}

std::vector<double> row_norms(const Matrix& m) {
  std::vector<double> norms(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    norms[i] = std::sqrt(kernels::dot(m.row(i), m.row(i)));
  }
  return norms;
}

const LandmarkSet& landmarks_for(const WeightScheme& scheme, const std::string& id) {
  if (scheme.landmarks == nullptr) {
    throw DataError("lmk weighting requires a landmarks file");
  }
  auto it = scheme.landmarks->find(id);
  if (it == scheme.landmarks->end()) {
    throw DataError("no landmarks for item '" + id + "'");
  }
  return it->second;
}

}  // namespace

std::pair<WeightedFeatureSet, WeightedFeatureSet> weigh_pair(
    const EmbeddedItem& query, const EmbeddedItem& gallery,
    const WeightScheme& scheme) {
  const PatchGrid& qg = query.patch_grid;
  const PatchGrid& gg = gallery.patch_grid;
  if (qg.height() != gg.height() || qg.width() != gg.width() ||
      qg.channels() != gg.channels()) {
    throw DataError("grid dims differ between '" + query.item_id + "' and '" +
                    gallery.item_id + "'");
  }

  WeightedFeatureSet q{patch_matrix(query), {}};
  WeightedFeatureSet g{patch_matrix(gallery), {}};
  const std::size_t n = q.patches.rows();

  std::vector<double> raw_q;
  std::vector<double> raw_g;
  switch (scheme.kind) {
    case Scheme::Uniform:
      raw_q.assign(n, 1.0 / static_cast<double>(n));
      raw_g = raw_q;
      break;
    case Scheme::APC:
      raw_q = correlation_weights(q.patches, mean_row(g.patches));
      raw_g = correlation_weights(g.patches, mean_row(q.patches));
      break;
    case Scheme::CC: {
      if (query.image_embedding.size() != qg.channels() ||
          gallery.image_embedding.size() != gg.channels()) {
        throw DataError("cc weighting requires C == D_img (C=" +
                        std::to_string(qg.channels()) + ", D_img=" +
                        std::to_string(query.image_embedding.size()) + ")");
      }
      const std::vector<double> q_summary(query.image_embedding.begin(),
                                          query.image_embedding.end());
      const std::vector<double> g_summary(gallery.image_embedding.begin(),
                                          gallery.image_embedding.end());
      raw_q = correlation_weights(q.patches, g_summary);
      raw_g = correlation_weights(g.patches, q_summary);
      break;
    }
    case Scheme::SC: {
      const auto qn = row_norms(q.patches);
      const auto gn = row_norms(g.patches);
      Matrix cos(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double denom = qn[i] * gn[j];
          cos(i, j) = denom > 0.0 ? kernels::dot(q.patches.row(i), g.patches.row(j)) / denom
                                  : 0.0;
        }
      }
      raw_q.assign(n, 0.0);
      raw_g.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          raw_q[i] += cos(i, j);
          raw_g[j] += cos(i, j);
        }
      }
      for (double& w : raw_q) w = std::max(0.0, w);
      for (double& w : raw_g) w = std::max(0.0, w);
      break;
    }
    case Scheme::LMK:
      raw_q = landmark_counts(landmarks_for(scheme, query.item_id), qg.height(),
                              qg.width());
      raw_g = landmark_counts(landmarks_for(scheme, gallery.item_id), gg.height(),
                              gg.width());
      break;
  }

  q.weights = normalize_weights(raw_q);
  g.weights = normalize_weights(raw_g);
  return {std::move(q), std::move(g)};
}

}  // namespace dfemd
