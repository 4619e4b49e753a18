#pragma once

#include <cstdint>
#include <span>

namespace cot::kernels {

// Summation is chunked and the partials are combined serially in index
// order, so parallel results are bit-identical to the serial reference for
// any thread count.
inline constexpr std::size_t kSumChunk = 4096;

double sum_serial(std::span<const double> xs);
double sum(std::span<const double> xs);

// out[i*n + j] = sum_k |a[i*dim+k] - b[j*dim+k]| (L1 ground cost).
void l1_cost_matrix_serial(const double* a, std::size_t m, const double* b,
                           std::size_t n, std::size_t dim, double* out);
void l1_cost_matrix(const double* a, std::size_t m, const double* b,
                    std::size_t n, std::size_t dim, double* out);

struct ArgMin {
  double value;
  std::int64_t index;  // -1 when the range is empty
};

// Minimum reduced cost (cost[a] - u[a/cols] - v[a%cols]) over arc ids
// [begin, end); ties resolve to the lowest arc id.
ArgMin min_reduced_cost_serial(const double* cost, const double* u,
                               const double* v, std::int64_t cols,
                               std::int64_t begin, std::int64_t end);
ArgMin min_reduced_cost(const double* cost, const double* u, const double* v,
                        std::int64_t cols, std::int64_t begin,
                        std::int64_t end);

// Row-wise softmax with temperature: out[i,:] = softmax(logits[i,:] / t).
// Each row is max-shifted before exponentiation.
void softmax_rows_serial(const double* logits, std::size_t rows,
                         std::size_t cols, double temperature, double* out);
void softmax_rows(const double* logits, std::size_t rows, std::size_t cols,
                  double temperature, double* out);

}  // namespace cot::kernels
