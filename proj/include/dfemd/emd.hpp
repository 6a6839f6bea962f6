#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dfemd/matrix.hpp"
#include "dfemd/weighting.hpp"

namespace dfemd {

// d_ij = 1 - cos(q_i, g_j). Entries lie in [0, 2].
using GroundDistanceMatrix = Matrix;

struct SinkhornConfig {
  // Entropic regularization, in units of the cost entries.
  double epsilon = 1e-3;
  int max_iters = 5000;
  // Stop once the L1 violation of the marginals drops below this.
  double tolerance = 1e-6;

  // Throws UsageError unless epsilon > 0, tolerance > 0 and max_iters >= 1.
  void validate() const;
};

struct TransportPlan {
  Matrix flow;
  double cost = 0.0;
  bool converged = false;
  int iterations = 0;
  // Dual potentials u (rows) and v (columns). The exact solver returns an
  // optimal dual: u_i + v_j <= d_ij with sum a_i u_i + sum b_j v_j == cost.
  std::vector<double> row_potential;
  std::vector<double> col_potential;
};

// Largest N accepted by exact_emd.
inline constexpr std::size_t kExactMaxSize = 16;

// Rows of q and g are patch embeddings. Throws DataError naming the offending
// patch when a vector has zero norm, or when the shapes differ.
GroundDistanceMatrix ground_distance(const Matrix& q_patches,
                                     const Matrix& g_patches);

// Balanced entropic OT on an arbitrary cost matrix, solved in the log domain
// with epsilon scaling. Rows/columns with zero mass are excluded and carry
// zero flow. The returned flow is projected onto the transport polytope, so
// its marginals match (a, b) up to rounding even when converged == false.
TransportPlan sinkhorn(std::span<const double> a, std::span<const double> b,
                       const Matrix& cost, const SinkhornConfig& cfg);

// EMD between two weighted patch sets with cosine ground distance.
TransportPlan solve_emd(const WeightedFeatureSet& q, const WeightedFeatureSet& g,
                        const SinkhornConfig& cfg);

// Exact optimum of the balanced transportation LP via the transportation
// simplex (northwest-corner start, MODI pricing). Throws UsageError when
// either side exceeds kExactMaxSize.
TransportPlan exact_transport(std::span<const double> a, std::span<const double> b,
                              const Matrix& cost);

TransportPlan exact_emd(const WeightedFeatureSet& q, const WeightedFeatureSet& g,
                        const GroundDistanceMatrix& d);

// Convenience: exact EMD with the cosine ground distance of q and g.
TransportPlan exact_emd(const WeightedFeatureSet& q, const WeightedFeatureSet& g);

// Min-max normalized flow row of one query patch; constant rows map to zeros.
std::vector<double> normalize_flow(const TransportPlan& plan,
                                   std::size_t patch_index);

// Index of the highest-flow gallery patch for every query patch (first index
// wins ties).
std::vector<std::size_t> flow_argmax(const TransportPlan& plan);

}  // namespace dfemd
