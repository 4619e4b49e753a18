#include <doctest.h>

#include <cmath>
#include <vector>

#include "cot/kernels.hpp"
#include "cot/rng.hpp"

using namespace cot;

namespace {

std::vector<double> random_vector(std::uint64_t seed, std::size_t n,
                                  double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  std::vector<double> xs(n);
  for (double& x : xs) x = lo + (hi - lo) * rng.uniform();
  return xs;
}

}  // namespace

TEST_CASE("sum matches serial reference bit for bit") {
  // Sizes straddling the chunk boundary, where a combine-order bug would show.
  for (const std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{7},
                              kernels::kSumChunk - 1, kernels::kSumChunk,
                              kernels::kSumChunk + 1, std::size_t{100003}}) {
    const std::vector<double> xs = random_vector(n + 11, n);
    CHECK(kernels::sum(xs) == kernels::sum_serial(xs));
  }
}

TEST_CASE("sum is accurate against long-double accumulation") {
  const std::vector<double> xs = random_vector(3, 50000);
  long double acc = 0.0L;
  for (const double x : xs) acc += x;
  CHECK(kernels::sum_serial(xs) ==
        doctest::Approx(static_cast<double>(acc)).epsilon(1e-12));
}

TEST_CASE("l1 cost matrix matches serial reference and hand values") {
  const std::size_t m = 17, n = 23, dim = 5;
  const std::vector<double> a = random_vector(1, m * dim);
  const std::vector<double> b = random_vector(2, n * dim);
  std::vector<double> serial(m * n), parallel(m * n);
  kernels::l1_cost_matrix_serial(a.data(), m, b.data(), n, dim, serial.data());
  kernels::l1_cost_matrix(a.data(), m, b.data(), n, dim, parallel.data());
  CHECK(serial == parallel);

  const std::vector<double> p = {0.8, 0.1, 0.1};
  const std::vector<double> q = {1.0, 0.0, 0.0};
  std::vector<double> out(1);
  kernels::l1_cost_matrix_serial(p.data(), 1, q.data(), 1, 3, out.data());
  CHECK(out[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("min reduced cost matches serial reference and resolves ties low") {
  const std::int64_t rows = 31, cols = 37;
  const std::vector<double> cost = random_vector(4, rows * cols, 0.0, 1.0);
  const std::vector<double> u = random_vector(5, rows);
  const std::vector<double> v = random_vector(6, cols);
  for (const auto& [begin, end] :
       {std::pair<std::int64_t, std::int64_t>{0, rows * cols},
        {13, rows * cols - 7},
        {100, 101},
        {50, 50}}) {
    const kernels::ArgMin s =
        kernels::min_reduced_cost_serial(cost.data(), u.data(), v.data(), cols,
                                         begin, end);
    const kernels::ArgMin p = kernels::min_reduced_cost(
        cost.data(), u.data(), v.data(), cols, begin, end);
    CHECK(s.index == p.index);
    CHECK(s.value == p.value);
  }

  // Empty range sentinel.
  CHECK(kernels::min_reduced_cost_serial(cost.data(), u.data(), v.data(), cols,
                                         5, 5)
            .index == -1);

  // All-equal reduced costs: the lowest arc id must win in both variants.
  const std::vector<double> flat(rows * cols, 0.25);
  const std::vector<double> zu(rows, 0.0), zv(cols, 0.0);
  CHECK(kernels::min_reduced_cost_serial(flat.data(), zu.data(), zv.data(),
                                         cols, 3, rows * cols)
            .index == 3);
  CHECK(kernels::min_reduced_cost(flat.data(), zu.data(), zv.data(), cols, 3,
                                  rows * cols)
            .index == 3);
}

TEST_CASE("softmax rows matches serial reference bit for bit") {
  const std::size_t rows = 301, cols = 7;
  const std::vector<double> logits = random_vector(9, rows * cols, -30.0, 30.0);
  std::vector<double> serial(rows * cols), parallel(rows * cols);
  for (const double t : {0.01, 1.0, 2.5, 100.0}) {
    kernels::softmax_rows_serial(logits.data(), rows, cols, t, serial.data());
    kernels::softmax_rows(logits.data(), rows, cols, t, parallel.data());
    CHECK(serial == parallel);
    for (std::size_t i = 0; i < rows; ++i) {
      double row_sum = 0.0;
      for (std::size_t k = 0; k < cols; ++k) row_sum += serial[i * cols + k];
      CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}
