#include "cot/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cot/errors.hpp"
#include "cot/kernels.hpp"

namespace cot {

namespace {

// Entering arcs need a reduced cost strictly below this, which keeps
// degenerate epsilon-noise pivots out of the basis.
constexpr double kEnteringThreshold = -1e-12;
constexpr double kCertifyTolerance = -1e-9;

struct IntegerUnits {
  std::vector<std::int64_t> supply;
  std::vector<std::int64_t> demand;
  std::int64_t total = 0;
};

std::vector<std::int64_t> rationalize(const std::vector<double>& weights,
                                      std::int64_t denom) {
  std::vector<std::int64_t> units(weights.size());
  std::int64_t sum = 0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    units[i] = std::llround(weights[i] * static_cast<double>(denom));
    sum += units[i];
    if (weights[i] > weights[largest]) largest = i;
  }
  units[largest] += denom - sum;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (units[i] <= 0) {
      throw ValidationError("atom " + std::to_string(i) +
                            ": weight too small to represent in mass units");
    }
  }
  return units;
}

// Exact integer mass units. When both measures are uniform, lcm(m,n) total
// units make every atom's share a whole number. Otherwise both weight
// vectors are scaled by 2^52 and rounded, with the largest atom absorbing
// the rounding gap; the marginal error per atom stays far below 1e-9.
IntegerUnits integer_units(const EmpiricalMeasure& a,
                           const EmpiricalMeasure& b) {
  IntegerUnits out;
  const std::int64_t m = static_cast<std::int64_t>(a.size());
  const std::int64_t n = static_cast<std::int64_t>(b.size());
  if (a.has_uniform_weights() && b.has_uniform_weights()) {
    const std::int64_t lcm = std::lcm(m, n);
    out.supply.assign(a.size(), lcm / m);
    out.demand.assign(b.size(), lcm / n);
    out.total = lcm;
  } else {
    const std::int64_t denom = std::int64_t{1} << 52;
    out.supply = rationalize(a.weights(), denom);
    out.demand = rationalize(b.weights(), denom);
    out.total = denom;
  }
  return out;
}

class TransportSimplex {
 public:
  TransportSimplex(const CostMatrix& cost, IntegerUnits units,
                   const SolveOptions& options)
      : m_(static_cast<std::int32_t>(cost.rows)),
        n_(static_cast<std::int32_t>(cost.cols)),
        num_nodes_(m_ + n_),
        num_arcs_(static_cast<std::int64_t>(cost.rows) * cost.cols),
        cost_(cost.entries.data()),
        units_(std::move(units)),
        options_(options) {
    block_ = std::max<std::int64_t>(
        64, static_cast<std::int64_t>(std::sqrt(static_cast<double>(num_arcs_))));
    const std::size_t slots = static_cast<std::size_t>(num_nodes_) - 1;
    bsrc_.resize(slots);
    bdst_.resize(slots);
    flow_.resize(slots);
    adj_.resize(static_cast<std::size_t>(num_nodes_));
    parent_.resize(static_cast<std::size_t>(num_nodes_));
    parent_slot_.resize(static_cast<std::size_t>(num_nodes_));
    depth_.resize(static_cast<std::size_t>(num_nodes_));
    pot_.resize(static_cast<std::size_t>(num_nodes_));
  }

  SolveDetails run() {
    initial_basis();
    rebuild_tree();
    const std::int64_t budget =
        options_.pivot_budget > 0
            ? options_.pivot_budget
            : 50 * static_cast<std::int64_t>(num_nodes_) * num_nodes_;
    while (true) {
      const std::int64_t entering = find_entering_arc();
      if (entering < 0) break;
      if (pivots_ >= budget) {
        throw SolverError("transportation simplex did not converge within " +
                              std::to_string(budget) +
                              " pivots; instance looks degenerate",
                          pivots_);
      }
      ++pivots_;
      pivot(entering);
    }
    if (options_.certify) certify();
    return extract();
  }

 private:
  // Row-minimum crossing-out heuristic: process rows in order, repeatedly
  // shipping to the cheapest still-active column (ties to the lowest index).
  // Every emission deactivates exactly one row or column except the last,
  // which yields exactly m+n-1 basic arcs forming a spanning tree, zero-mass
  // arcs included for degenerate atoms.
  void initial_basis() {
    std::vector<std::int64_t> s = units_.supply;
    std::vector<std::int64_t> d = units_.demand;
    std::vector<char> col_active(static_cast<std::size_t>(n_), 1);
    std::int32_t active_cols = n_;
    std::size_t slot = 0;
    for (std::int32_t i = 0; i < m_; ++i) {
      const double* row = cost_ + static_cast<std::int64_t>(i) * n_;
      bool row_active = true;
      while (row_active) {
        std::int32_t jbest = -1;
        double cbest = std::numeric_limits<double>::infinity();
        for (std::int32_t j = 0; j < n_; ++j) {
          if (col_active[static_cast<std::size_t>(j)] && row[j] < cbest) {
            cbest = row[j];
            jbest = j;
          }
        }
        if (jbest < 0 || slot >= bsrc_.size()) {
          throw SolverError("internal: initial basis construction failed",
                            pivots_);
        }
        const std::int64_t f = std::min(s[static_cast<std::size_t>(i)],
                                        d[static_cast<std::size_t>(jbest)]);
        bsrc_[slot] = i;
        bdst_[slot] = m_ + jbest;
        flow_[slot] = f;
        adj_[static_cast<std::size_t>(i)].push_back(
            static_cast<std::int32_t>(slot));
        adj_[static_cast<std::size_t>(m_ + jbest)].push_back(
            static_cast<std::int32_t>(slot));
        ++slot;
        s[static_cast<std::size_t>(i)] -= f;
        d[static_cast<std::size_t>(jbest)] -= f;
        const bool row_done = s[static_cast<std::size_t>(i)] == 0;
        const bool col_done = d[static_cast<std::size_t>(jbest)] == 0;
        const bool last_row = i + 1 == m_;
        if (row_done && !col_done) {
          row_active = false;
        } else if (!row_done && col_done) {
          col_active[static_cast<std::size_t>(jbest)] = 0;
          --active_cols;
        } else if (active_cols > 1) {
          col_active[static_cast<std::size_t>(jbest)] = 0;
          --active_cols;
        } else if (!last_row) {
          row_active = false;
        } else {
          col_active[static_cast<std::size_t>(jbest)] = 0;
          --active_cols;
          row_active = false;
        }
      }
    }
    if (slot != bsrc_.size()) {
      throw SolverError("internal: initial basis is not a spanning tree",
                        pivots_);
    }
  }

  // Recompute parents, depths and potentials from scratch by DFS over the
  // basic arcs. Potentials satisfy u_i + v_j = c_ij exactly on every basic
  // arc, so basic arcs always price out to exactly zero.
  void rebuild_tree() {
    std::fill(parent_.begin(), parent_.end(), kUnvisited);
    parent_[0] = -1;
    parent_slot_[0] = -1;
    depth_[0] = 0;
    pot_[0] = 0.0;
    stack_.clear();
    stack_.push_back(0);
    std::int32_t seen = 1;
    while (!stack_.empty()) {
      const std::int32_t u = stack_.back();
      stack_.pop_back();
      for (const std::int32_t s : adj_[static_cast<std::size_t>(u)]) {
        const std::int32_t w = bsrc_[static_cast<std::size_t>(s)] == u
                                   ? bdst_[static_cast<std::size_t>(s)]
                                   : bsrc_[static_cast<std::size_t>(s)];
        if (parent_[static_cast<std::size_t>(w)] != kUnvisited) continue;
        parent_[static_cast<std::size_t>(w)] = u;
        parent_slot_[static_cast<std::size_t>(w)] = s;
        depth_[static_cast<std::size_t>(w)] =
            depth_[static_cast<std::size_t>(u)] + 1;
        pot_[static_cast<std::size_t>(w)] =
            arc_cost(s) - pot_[static_cast<std::size_t>(u)];
        stack_.push_back(w);
        ++seen;
      }
    }
    if (seen != num_nodes_) {
      throw SolverError("internal: basis does not span all atoms", pivots_);
    }
  }

  double arc_cost(std::int32_t slot) const {
    return cost_[static_cast<std::int64_t>(bsrc_[static_cast<std::size_t>(slot)]) * n_ +
                 (bdst_[static_cast<std::size_t>(slot)] - m_)];
  }

  // Block pricing with a rolling start position: scan up to one block past
  // the first arc whose reduced cost beats the entering threshold.
  std::int64_t find_entering_arc() {
    const double* u = pot_.data();
    const double* v = pot_.data() + m_;
    std::int64_t scanned = 0;
    std::int64_t pos = next_arc_;
    while (scanned < num_arcs_) {
      const std::int64_t len = std::min(block_, num_arcs_ - scanned);
      const std::int64_t head = std::min(len, num_arcs_ - pos);
      kernels::ArgMin best =
          kernels::min_reduced_cost(cost_, u, v, n_, pos, pos + head);
      if (head < len) {
        const kernels::ArgMin tail =
            kernels::min_reduced_cost(cost_, u, v, n_, 0, len - head);
        if (tail.index >= 0 && tail.value < best.value) best = tail;
      }
      scanned += len;
      pos += len;
      if (pos >= num_arcs_) pos -= num_arcs_;
      if (best.index >= 0 && best.value < kEnteringThreshold) {
        next_arc_ = pos;
        return best.index;
      }
    }
    return -1;
  }

  // Swap the entering arc into the basis. The cycle it closes runs from its
  // source endpoint up to the common ancestor and down to its target
  // endpoint; pushing mass around it drains arcs oriented against the push.
  // On the source-side path those are the arcs below a source node, on the
  // target-side path the arcs below a target node. The leaving arc is the
  // drained arc of minimum flow; ties keep the first candidate on the
  // source side (strict <) and the last on the target side (<=).
  void pivot(std::int64_t entering) {
    const std::int32_t i0 = static_cast<std::int32_t>(entering / n_);
    const std::int32_t j0 = m_ + static_cast<std::int32_t>(entering % n_);
    path_src_.clear();
    path_dst_.clear();
    std::int32_t x = i0;
    std::int32_t y = j0;
    while (x != y) {
      if (depth_[static_cast<std::size_t>(x)] >=
          depth_[static_cast<std::size_t>(y)]) {
        path_src_.push_back(x);
        x = parent_[static_cast<std::size_t>(x)];
      } else {
        path_dst_.push_back(y);
        y = parent_[static_cast<std::size_t>(y)];
      }
    }
    std::int64_t delta = std::numeric_limits<std::int64_t>::max();
    std::int32_t leave_node = -1;
    for (const std::int32_t nd : path_src_) {
      if (nd < m_ &&
          flow_[static_cast<std::size_t>(
              parent_slot_[static_cast<std::size_t>(nd)])] < delta) {
        delta = flow_[static_cast<std::size_t>(
            parent_slot_[static_cast<std::size_t>(nd)])];
        leave_node = nd;
      }
    }
    for (const std::int32_t nd : path_dst_) {
      if (nd >= m_ &&
          flow_[static_cast<std::size_t>(
              parent_slot_[static_cast<std::size_t>(nd)])] <= delta) {
        delta = flow_[static_cast<std::size_t>(
            parent_slot_[static_cast<std::size_t>(nd)])];
        leave_node = nd;
      }
    }
    if (leave_node < 0) {
      throw SolverError("internal: pivot found no leaving arc", pivots_);
    }
    for (const std::int32_t nd : path_src_) {
      flow_[static_cast<std::size_t>(parent_slot_[static_cast<std::size_t>(
          nd)])] += nd < m_ ? -delta : delta;
    }
    for (const std::int32_t nd : path_dst_) {
      flow_[static_cast<std::size_t>(parent_slot_[static_cast<std::size_t>(
          nd)])] += nd >= m_ ? -delta : delta;
    }
    const std::int32_t slot = parent_slot_[static_cast<std::size_t>(leave_node)];
    detach(slot);
    bsrc_[static_cast<std::size_t>(slot)] = i0;
    bdst_[static_cast<std::size_t>(slot)] = j0;
    flow_[static_cast<std::size_t>(slot)] = delta;
    adj_[static_cast<std::size_t>(i0)].push_back(slot);
    adj_[static_cast<std::size_t>(j0)].push_back(slot);
    rebuild_tree();
  }

  void detach(std::int32_t slot) {
    unlink(adj_[static_cast<std::size_t>(bsrc_[static_cast<std::size_t>(slot)])],
           slot);
    unlink(adj_[static_cast<std::size_t>(bdst_[static_cast<std::size_t>(slot)])],
           slot);
  }

  static void unlink(std::vector<std::int32_t>& slots, std::int32_t slot) {
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (slots[k] == slot) {
        slots[k] = slots.back();
        slots.pop_back();
        return;
      }
    }
  }

  void certify() const {
    const kernels::ArgMin best = kernels::min_reduced_cost(
        cost_, pot_.data(), pot_.data() + m_, n_, 0, num_arcs_);
    if (best.index >= 0 && best.value < kCertifyTolerance) {
      throw SolverError("certification failed: arc " +
                            std::to_string(best.index) + " has reduced cost " +
                            std::to_string(best.value),
                        pivots_);
    }
    std::vector<std::int64_t> row_sum(static_cast<std::size_t>(m_), 0);
    std::vector<std::int64_t> col_sum(static_cast<std::size_t>(n_), 0);
    for (std::size_t s = 0; s < flow_.size(); ++s) {
      row_sum[static_cast<std::size_t>(bsrc_[s])] += flow_[s];
      col_sum[static_cast<std::size_t>(bdst_[s] - m_)] += flow_[s];
    }
    if (row_sum != units_.supply || col_sum != units_.demand) {
      throw SolverError("certification failed: marginals do not match",
                        pivots_);
    }
  }

  SolveDetails extract() const {
    SolveDetails out;
    out.pivots = pivots_;
    out.source_potential.assign(pot_.begin(), pot_.begin() + m_);
    out.target_potential.assign(pot_.begin() + m_, pot_.end());
    const double inv_total = 1.0 / static_cast<double>(units_.total);
    for (std::size_t s = 0; s < flow_.size(); ++s) {
      if (flow_[s] > 0) {
        out.plan.flows.push_back(
            {bsrc_[s], static_cast<std::int32_t>(bdst_[s] - m_),
             static_cast<double>(flow_[s]) * inv_total});
      }
    }
    std::sort(out.plan.flows.begin(), out.plan.flows.end(),
              [](const TransportFlow& a, const TransportFlow& b) {
                return a.source != b.source ? a.source < b.source
                                            : a.target < b.target;
              });
    double total = 0.0;
    for (const TransportFlow& f : out.plan.flows) {
      total += f.mass * cost_[static_cast<std::int64_t>(f.source) * n_ + f.target];
    }
    out.plan.total_cost = total;
    return out;
  }

  static constexpr std::int32_t kUnvisited = -2;

  std::int32_t m_;
  std::int32_t n_;
  std::int32_t num_nodes_;
  std::int64_t num_arcs_;
  const double* cost_;
  IntegerUnits units_;
  SolveOptions options_;
  std::int64_t block_;
  std::int64_t next_arc_ = 0;
  std::int64_t pivots_ = 0;

  std::vector<std::int32_t> bsrc_;   // basic arc source node, one per slot
  std::vector<std::int32_t> bdst_;   // basic arc target node (offset by m)
  std::vector<std::int64_t> flow_;   // basic arc flow in integer units
  std::vector<std::vector<std::int32_t>> adj_;  // node -> incident slots
  std::vector<std::int32_t> parent_;
  std::vector<std::int32_t> parent_slot_;
  std::vector<std::int32_t> depth_;
  std::vector<double> pot_;  // u for sources, v for targets
  std::vector<std::int32_t> stack_;
  std::vector<std::int32_t> path_src_;
  std::vector<std::int32_t> path_dst_;
};

}  // namespace

CostMatrix build_cost_matrix(const EmpiricalMeasure& a,
                             const EmpiricalMeasure& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.dim()) +
                          " vs " + std::to_string(b.dim()));
  }
  CostMatrix cost;
  cost.rows = a.size();
  cost.cols = b.size();
  cost.entries.resize(cost.rows * cost.cols);
  kernels::l1_cost_matrix(a.points().data(), cost.rows, b.points().data(),
                          cost.cols, a.dim(), cost.entries.data());
  return cost;
}

SolveDetails solve_emd_detailed(const EmpiricalMeasure& a,
                                const EmpiricalMeasure& b,
                                const SolveOptions& options) {
  const CostMatrix cost = build_cost_matrix(a, b);
  TransportSimplex simplex(cost, integer_units(a, b), options);
  return simplex.run();
}

TransportPlan solve_emd(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                        const SolveOptions& options) {
  return solve_emd_detailed(a, b, options).plan;
}

double oracle_emd(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.dim()) +
                          " vs " + std::to_string(b.dim()));
  }
  if (!a.has_uniform_weights() || !b.has_uniform_weights()) {
    throw OracleRefusal("oracle handles uniform weights only");
  }
  const std::int64_t m = static_cast<std::int64_t>(a.size());
  const std::int64_t n = static_cast<std::int64_t>(b.size());
  const std::int64_t rep = std::lcm(m, n);
  if (rep > 10) {
    throw OracleRefusal("replicated size " + std::to_string(rep) +
                        " exceeds the oracle limit of 10");
  }
  // Replicate each atom lcm/m (resp. lcm/n) times; EMD of the two uniform
  // rep-point multisets is the assignment optimum divided by rep.
  const std::size_t r = static_cast<std::size_t>(rep);
  std::vector<double> cost(r * r);
  for (std::size_t p = 0; p < r; ++p) {
    const std::size_t ai = p / static_cast<std::size_t>(rep / m);
    for (std::size_t q = 0; q < r; ++q) {
      const std::size_t bj = q / static_cast<std::size_t>(rep / n);
      kernels::l1_cost_matrix_serial(a.point(ai).data(), 1,
                                     b.point(bj).data(), 1, a.dim(),
                                     &cost[p * r + q]);
    }
  }
  std::vector<std::size_t> perm(r);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t k = 0; k < r; ++k) total += cost[k * r + perm[k]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(rep);
}

}  // namespace cot
