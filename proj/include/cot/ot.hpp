#pragma once

#include <cstdint>
#include <vector>

#include "cot/types.hpp"

namespace cot {

// Dense L1 ground-cost matrix between two point clouds of equal dimension.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> entries;  // row-major, rows x cols

  double at(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }
};

CostMatrix build_cost_matrix(const EmpiricalMeasure& a,
                             const EmpiricalMeasure& b);

struct TransportFlow {
  std::int32_t source;
  std::int32_t target;
  double mass;
};

// Optimal coupling between two measures: at most m+n-1 positive flows whose
// marginals reproduce the two weight vectors; total_cost is the EMD.
struct TransportPlan {
  std::vector<TransportFlow> flows;  // sorted by (source, target)
  double total_cost = 0.0;
};

struct SolveOptions {
  // Re-scan all arcs after convergence and fail if any reduced cost is
  // below -1e-9, and re-check integer marginals. For tests and debugging.
  bool certify = false;
  // 0 means the default budget of 50*(m+n)^2 pivots.
  std::int64_t pivot_budget = 0;
};

struct SolveDetails {
  TransportPlan plan;
  std::vector<double> source_potential;  // dual u, one per source atom
  std::vector<double> target_potential;  // dual v, one per target atom
  std::int64_t pivots = 0;
};

// Exact EMD (1-Wasserstein, L1 ground metric) via a transportation-problem
// network simplex. Masses are handled as exact integer units; see ot.cpp.
TransportPlan solve_emd(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                        const SolveOptions& options = {});
SolveDetails solve_emd_detailed(const EmpiricalMeasure& a,
                                const EmpiricalMeasure& b,
                                const SolveOptions& options = {});

// Brute-force EMD by permutation enumeration on the replicated uniform
// instance. Refuses non-uniform weights and replicated sizes above 10.
double oracle_emd(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

}  // namespace cot
