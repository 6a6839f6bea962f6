#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dfemd/emd.hpp"
#include "dfemd/error.hpp"

namespace dfemd {

namespace {

constexpr double kReducedCostTol = 1e-12;
// Switch from Dantzig pricing to Bland's rule after this many consecutive
// degenerate pivots; Bland's rule cannot cycle.
constexpr int kDegenerateStreak = 32;
constexpr int kMaxPivots = 100000;

struct Cell {
  std::size_t row;
  std::size_t col;
  double value;
};

// Spanning-tree basis of the m x n transportation problem. Nodes 0..m-1 are
// rows, m..m+n-1 are columns; every basic cell is a tree edge.
class Basis {
 public:
  Basis(std::size_t m, std::size_t n) : m_(m), n_(n), basic_(m * n, false) {}

  void add(std::size_t r, std::size_t c, double v) {
    cells_.push_back({r, c, v});
    basic_[r * n_ + c] = true;
  }

  bool is_basic(std::size_t r, std::size_t c) const { return basic_[r * n_ + c]; }
  std::vector<Cell>& cells() { return cells_; }

  // u_0 = 0, then u_i + v_j = c_ij on every basic cell.
  void potentials(const Matrix& cost, std::vector<double>& u, std::vector<double>& v) const {
    const std::size_t nodes = m_ + n_;
    std::vector<std::vector<std::size_t>> adj(nodes);
    for (std::size_t e = 0; e < cells_.size(); ++e) {
      adj[cells_[e].row].push_back(e);
      adj[m_ + cells_[e].col].push_back(e);
    }
    u.assign(m_, 0.0);
    v.assign(n_, 0.0);
    std::vector<bool> seen(nodes, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t e : adj[node]) {
        const Cell& cell = cells_[e];
        const std::size_t rnode = cell.row;
        const std::size_t cnode = m_ + cell.col;
        if (node == rnode && !seen[cnode]) {
          v[cell.col] = cost(cell.row, cell.col) - u[cell.row];
          seen[cnode] = true;
          stack.push_back(cnode);
        } else if (node == cnode && !seen[rnode]) {
          u[cell.row] = cost(cell.row, cell.col) - v[cell.col];
          seen[rnode] = true;
          stack.push_back(rnode);
        }
      }
    }
  }

  // Basic-cell indices along the tree path from row node `r` to column
  // node `c`, in order.
  std::vector<std::size_t> path(std::size_t r, std::size_t c) const {
    const std::size_t nodes = m_ + n_;
    std::vector<std::vector<std::size_t>> adj(nodes);
    for (std::size_t e = 0; e < cells_.size(); ++e) {
      adj[cells_[e].row].push_back(e);
      adj[m_ + cells_[e].col].push_back(e);
    }
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> via(nodes, kNone);
    std::vector<bool> seen(nodes, false);
    std::vector<std::size_t> queue{r};
    seen[r] = true;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t node = queue[head];
      if (node == m_ + c) break;
      for (std::size_t e : adj[node]) {
        const std::size_t other =
            node == cells_[e].row ? m_ + cells_[e].col : cells_[e].row;
        if (!seen[other]) {
          seen[other] = true;
          via[other] = e;
          queue.push_back(other);
        }
      }
    }
    std::vector<std::size_t> edges;
    for (std::size_t node = m_ + c; node != r;) {
      const std::size_t e = via[node];
      if (e == kNone) throw NumericalError("transportation basis is not a spanning tree");
      edges.push_back(e);
      node = node == cells_[e].row ? m_ + cells_[e].col : cells_[e].row;
    }
    std::reverse(edges.begin(), edges.end());
    return edges;
  }

  void replace(std::size_t leaving, std::size_t r, std::size_t c, double v) {
    basic_[cells_[leaving].row * n_ + cells_[leaving].col] = false;
    cells_[leaving] = {r, c, v};
    basic_[r * n_ + c] = true;
  }

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<bool> basic_;
  std::vector<Cell> cells_;
};

Basis northwest_corner(std::span<const double> a, std::span<const double> b) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  Basis basis(m, n);
  std::vector<double> supply(a.begin(), a.end());
  std::vector<double> demand(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < m && j < n) {
    const bool last_row = i + 1 == m;
    const bool last_col = j + 1 == n;
    double x = std::min(supply[i], demand[j]);
    // The final cell absorbs the rounding residue of the two totals.
    if (last_row && last_col) x = std::max(supply[i], demand[j]);
    basis.add(i, j, std::max(0.0, x));
    supply[i] -= x;
    demand[j] -= x;
    if (last_row && last_col) break;
    // Exactly one index advances per cell, which keeps m + n - 1 basic cells
    // (some possibly zero) forming a spanning tree.
    if (last_col || (!last_row && supply[i] <= demand[j])) {
      ++i;
    } else {
      ++j;
    }
  }
  return basis;
}

}  // namespace

TransportPlan exact_transport(std::span<const double> a, std::span<const double> b,
                              const Matrix& cost) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  if (m == 0 || n == 0) throw DataError("empty transport problem");
  if (m > kExactMaxSize || n > kExactMaxSize) {
    throw UsageError("exact solver limited to " + std::to_string(kExactMaxSize) +
                     " patches, got " + std::to_string(std::max(m, n)));
  }
  if (cost.rows() != m || cost.cols() != n) {
    throw DataError("cost matrix shape does not match the weight vectors");
  }
  double ta = 0.0;
  double tb = 0.0;
  for (double x : a) {
    if (!std::isfinite(x) || x < 0.0) throw NumericalError("invalid query weight");
    ta += x;
  }
  for (double x : b) {
    if (!std::isfinite(x) || x < 0.0) throw NumericalError("invalid gallery weight");
    tb += x;
  }
  if (std::abs(ta - 1.0) > kWeightSumTolerance || std::abs(tb - 1.0) > kWeightSumTolerance) {
    throw NumericalError("exact solver requires weights summing to 1");
  }
  for (double c : cost.data()) {
    if (!std::isfinite(c)) throw NumericalError("non-finite ground distance");
  }

  Basis basis = northwest_corner(a, b);
  std::vector<double> u, v;
  int pivots = 0;
  int degenerate = 0;
  while (true) {
    basis.potentials(cost, u, v);

    std::size_t er = 0, ec = 0;
    double best = -kReducedCostTol;
    bool found = false;
    const bool bland = degenerate >= kDegenerateStreak;
    for (std::size_t i = 0; i < m && !(bland && found); ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (basis.is_basic(i, j)) continue;
        const double rc = cost(i, j) - u[i] - v[j];
        if (rc < best) {
          er = i;
          ec = j;
          found = true;
          if (bland) break;
          best = rc;
        }
      }
    }
    if (!found) break;
    if (++pivots > kMaxPivots) throw NumericalError("transportation simplex did not terminate");

    // Cycle: entering cell (+), then path cells alternate -, +, -, ...
    const std::vector<std::size_t> path = basis.path(er, ec);
    auto& cells = basis.cells();
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = path.front();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Cell& cell = cells[path[k]];
      const bool better = cell.value < theta ||
                          (bland && cell.value == theta &&
                           std::make_pair(cell.row, cell.col) <
                               std::make_pair(cells[leaving].row, cells[leaving].col));
      if (better) {
        theta = cell.value;
        leaving = path[k];
      }
    }
    degenerate = theta > 0.0 ? 0 : degenerate + 1;
    for (std::size_t k = 0; k < path.size(); ++k) {
      Cell& cell = cells[path[k]];
      cell.value = k % 2 == 0 ? std::max(0.0, cell.value - theta) : cell.value + theta;
    }
    basis.replace(leaving, er, ec, theta);
  }

  TransportPlan plan;
  plan.flow = Matrix(m, n);
  double total = 0.0;
  for (const Cell& cell : basis.cells()) {
    plan.flow(cell.row, cell.col) = cell.value;
    total += cost(cell.row, cell.col) * cell.value;
  }
  plan.cost = total;
  plan.converged = true;
  plan.iterations = pivots;
  plan.row_potential = std::move(u);
  plan.col_potential = std::move(v);
  return plan;
}

TransportPlan exact_emd(const WeightedFeatureSet& q, const WeightedFeatureSet& g,
                        const GroundDistanceMatrix& d) {
  return exact_transport(q.weights, g.weights, d);
}

TransportPlan exact_emd(const WeightedFeatureSet& q, const WeightedFeatureSet& g) {
  return exact_emd(q, g, ground_distance(q.patches, g.patches));
}

}  // namespace dfemd
