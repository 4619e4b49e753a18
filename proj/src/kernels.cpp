#include "cot/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cot::kernels {

namespace {

double sum_range(const double* xs, std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += xs[i];
  return s;
}

void softmax_one_row(const double* z, std::size_t cols, double inv_t,
                     double* out) {
  double zmax = z[0];
  for (std::size_t k = 1; k < cols; ++k) zmax = std::max(zmax, z[k]);
  double denom = 0.0;
  for (std::size_t k = 0; k < cols; ++k) {
    out[k] = std::exp((z[k] - zmax) * inv_t);
    denom += out[k];
  }
  const double inv_denom = 1.0 / denom;
  for (std::size_t k = 0; k < cols; ++k) out[k] *= inv_denom;
}

double l1_distance(const double* x, const double* y, std::size_t dim) {
  double d = 0.0;
  for (std::size_t k = 0; k < dim; ++k) d += std::abs(x[k] - y[k]);
  return d;
}

}  // namespace

double sum_serial(std::span<const double> xs) {
  double total = 0.0;
  for (std::size_t lo = 0; lo < xs.size(); lo += kSumChunk) {
    total += sum_range(xs.data(), lo, std::min(xs.size(), lo + kSumChunk));
  }
  return total;
}

double sum(std::span<const double> xs) {
  const std::size_t n_chunks = (xs.size() + kSumChunk - 1) / kSumChunk;
  if (n_chunks <= 1) return sum_serial(xs);
  std::vector<double> partial(n_chunks);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kSumChunk;
    partial[c] = sum_range(xs.data(), lo, std::min(xs.size(), lo + kSumChunk));
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void l1_cost_matrix_serial(const double* a, std::size_t m, const double* b,
                           std::size_t n, std::size_t dim, double* out) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * dim;
    double* row = out + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = l1_distance(ai, b + j * dim, dim);
    }
  }
}

void l1_cost_matrix(const double* a, std::size_t m, const double* b,
                    std::size_t n, std::size_t dim, double* out) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * dim;
    double* row = out + static_cast<std::size_t>(i) * n;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = l1_distance(ai, b + j * dim, dim);
    }
  }
}

ArgMin min_reduced_cost_serial(const double* cost, const double* u,
                               const double* v, std::int64_t cols,
                               std::int64_t begin, std::int64_t end) {
  ArgMin best{std::numeric_limits<double>::infinity(), -1};
  std::int64_t arc = begin;
  while (arc < end) {
    const std::int64_t i = arc / cols;
    const std::int64_t j0 = arc - i * cols;
    const std::int64_t j1 = std::min(cols, j0 + (end - arc));
    const double* row = cost + i * cols;
    const double ui = u[i];
    for (std::int64_t j = j0; j < j1; ++j) {
      const double rc = (row[j] - ui) - v[j];
      if (rc < best.value) {
        best.value = rc;
        best.index = i * cols + j;
      }
    }
    arc += j1 - j0;
  }
  return best;
}

ArgMin min_reduced_cost(const double* cost, const double* u, const double* v,
                        std::int64_t cols, std::int64_t begin,
                        std::int64_t end) {
  constexpr std::int64_t kChunk = 8192;
  const std::int64_t len = end - begin;
  if (len <= kChunk) return min_reduced_cost_serial(cost, u, v, cols, begin, end);
  const std::int64_t n_chunks = (len + kChunk - 1) / kChunk;
  std::vector<ArgMin> partial(static_cast<std::size_t>(n_chunks));
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    const std::int64_t lo = begin + c * kChunk;
    partial[c] = min_reduced_cost_serial(cost, u, v, cols, lo,
                                         std::min(end, lo + kChunk));
  }
  // Strict < keeps the earliest chunk on ties, matching the serial scan.
  ArgMin best{std::numeric_limits<double>::infinity(), -1};
  for (const ArgMin& p : partial) {
    if (p.index >= 0 && p.value < best.value) best = p;
  }
  return best;
}

void softmax_rows_serial(const double* logits, std::size_t rows,
                         std::size_t cols, double temperature, double* out) {
  const double inv_t = 1.0 / temperature;
  for (std::size_t i = 0; i < rows; ++i) {
    softmax_one_row(logits + i * cols, cols, inv_t, out + i * cols);
  }
}

void softmax_rows(const double* logits, std::size_t rows, std::size_t cols,
                  double temperature, double* out) {
  const double inv_t = 1.0 / temperature;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(rows); ++i) {
    const std::size_t off = static_cast<std::size_t>(i) * cols;
    softmax_one_row(logits + off, cols, inv_t, out + off);
  }
}

}  // namespace cot::kernels
