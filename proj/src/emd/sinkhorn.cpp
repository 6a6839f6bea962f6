#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dfemd/emd.hpp"
#include "dfemd/error.hpp"
#include "dfemd/kernels/kernels.hpp"

namespace dfemd {

void SinkhornConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw UsageError("sinkhorn.epsilon must be positive");
  }
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) {
    throw UsageError("sinkhorn.tolerance must be positive");
  }
  if (max_iters < 1) throw UsageError("sinkhorn.max_iters must be at least 1");
}

namespace {

// Each epsilon-scaling stage halves the regularization and runs until the
// marginals are this accurate (or the stage budget is spent).
constexpr double kStageFactor = 0.5;
constexpr double kStageTolerance = 1e-4;
constexpr int kStageMaxIters = 25;
// Over-relaxation of the potential updates at the target epsilon. Plain
// Sinkhorn (1.0) converges too slowly at epsilon = 1e-3 on costs in [0, 2].
constexpr double kRelaxation = 1.8;

double checked_total(std::span<const double> w, const char* side) {
  double total = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0) {
      throw NumericalError(std::string(side) + " weights must be finite and non-negative");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    throw NumericalError(std::string(side) + " weights sum to " + std::to_string(total) +
                         ", expected 1");
  }
  return total;
}

std::vector<std::size_t> support(std::span<const double> w) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) idx.push_back(i);
  return idx;
}

// Projects a non-negative matrix onto {P >= 0 : P 1 = a, P^T 1 = b}: scale
// rows and columns down to their targets, then spread the remaining deficit
// as a rank-one correction.
void round_to_polytope(Matrix& p, std::span<const double> a, std::span<const double> b) {
  const std::size_t m = p.rows();
  const std::size_t n = p.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double r = 0.0;
    for (double v : p.row(i)) r += v;
    if (r > a[i]) {
      const double s = a[i] / r;
      for (double& v : p.row(i)) v *= s;
    }
  }
  std::vector<double> col(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) col[j] += p(i, j);
  for (std::size_t j = 0; j < n; ++j) {
    if (col[j] > b[j]) {
      const double s = b[j] / col[j];
      for (std::size_t i = 0; i < m; ++i) p(i, j) *= s;
    }
  }
  std::vector<double> err_r(m), err_c(n);
  double l1 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = 0.0;
    for (double v : p.row(i)) r += v;
    err_r[i] = std::max(0.0, a[i] - r);
    l1 += err_r[i];
  }
  std::fill(col.begin(), col.end(), 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) col[j] += p(i, j);
  for (std::size_t j = 0; j < n; ++j) err_c[j] = std::max(0.0, b[j] - col[j]);
  if (l1 <= 0.0) return;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) += err_r[i] * err_c[j] / l1;
}

}  // namespace

TransportPlan sinkhorn(std::span<const double> a, std::span<const double> b,
                       const Matrix& cost, const SinkhornConfig& cfg) {
  cfg.validate();
  if (cost.rows() != a.size() || cost.cols() != b.size()) {
    throw DataError("cost matrix shape does not match the weight vectors");
  }
  checked_total(a, "query");
  checked_total(b, "gallery");
  for (double c : cost.data()) {
    if (!std::isfinite(c)) throw NumericalError("non-finite ground distance");
  }

  const auto rows = support(a);
  const auto cols = support(b);
  const std::size_t m = rows.size();
  const std::size_t n = cols.size();

  Matrix c(m, n);
  double c_max = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      c(i, j) = cost(rows[i], cols[j]);
      c_max = std::max(c_max, std::abs(c(i, j)));
    }
  }
  const Matrix ct = c.transposed();
  std::vector<double> sa(m), sb(n), log_a(m), log_b(n);
  for (std::size_t i = 0; i < m; ++i) {
    sa[i] = a[rows[i]];
    log_a[i] = std::log(sa[i]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    sb[j] = b[cols[j]];
    log_b[j] = std::log(sb[j]);
  }

  const kernels::KernelTable& k = kernels::active();
  std::vector<double> f(m, 0.0), g(n, 0.0), lse(m);

  double eps = std::max(cfg.epsilon, c_max);
  int iters = 0;
  bool converged = false;
  double violation = std::numeric_limits<double>::infinity();
  while (true) {
    const bool final_stage = eps <= cfg.epsilon;
    const double stage_tol = final_stage ? cfg.tolerance : kStageTolerance;
    int stage_iters = 0;
    while (true) {
      const double inv = 1.0 / eps;
      violation = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        lse[i] = k.log_sum_exp_diff(g.data(), c.row(i).data(), inv, n);
        violation += std::abs(std::exp(f[i] * inv + lse[i]) - sa[i]);
      }
      // Relaxed updates leave the columns inexact too.
      if (final_stage) {
        for (std::size_t j = 0; j < n; ++j) {
          const double l = k.log_sum_exp_diff(f.data(), ct.row(j).data(), inv, m);
          violation += std::abs(std::exp(g[j] * inv + l) - sb[j]);
        }
      }
      if (stage_iters > 0 && violation <= stage_tol) break;
      if (!final_stage && stage_iters >= kStageMaxIters) break;
      if (iters >= cfg.max_iters) break;
      const double w = final_stage ? kRelaxation : 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        f[i] = (1.0 - w) * f[i] + w * eps * (log_a[i] - lse[i]);
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double l = k.log_sum_exp_diff(f.data(), ct.row(j).data(), inv, m);
        g[j] = (1.0 - w) * g[j] + w * eps * (log_b[j] - l);
      }
      ++iters;
      ++stage_iters;
    }
    if (final_stage) {
      converged = violation <= cfg.tolerance;
      break;
    }
    if (iters >= cfg.max_iters) break;
    eps = std::max(cfg.epsilon, eps * kStageFactor);
  }
  Matrix p(m, n);
  const double inv = 1.0 / eps;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) = std::exp((f[i] + g[j] - c(i, j)) * inv);
  round_to_polytope(p, sa, sb);

  TransportPlan plan;
  plan.flow = Matrix(a.size(), b.size());
  plan.row_potential.assign(a.size(), 0.0);
  plan.col_potential.assign(b.size(), 0.0);
  double total_cost = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    plan.row_potential[rows[i]] = f[i];
    for (std::size_t j = 0; j < n; ++j) {
      plan.flow(rows[i], cols[j]) = p(i, j);
      total_cost += c(i, j) * p(i, j);
    }
  }
  for (std::size_t j = 0; j < n; ++j) plan.col_potential[cols[j]] = g[j];
  if (!std::isfinite(total_cost)) throw NumericalError("non-finite transport cost");
  plan.cost = total_cost;
  plan.converged = converged;
  plan.iterations = iters;
  return plan;
}

TransportPlan solve_emd(const WeightedFeatureSet& q, const WeightedFeatureSet& g,
                        const SinkhornConfig& cfg) {
  return sinkhorn(q.weights, g.weights, ground_distance(q.patches, g.patches), cfg);
}

}  // namespace dfemd
