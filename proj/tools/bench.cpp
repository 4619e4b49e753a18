#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cot/kernels.hpp"
#include "cot/ot.hpp"
#include "cot/rng.hpp"
#include "cot/types.hpp"

namespace {

using namespace cot;

double seconds_best_of(int reps, const std::function<void()>& body) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, double serial_s, double parallel_s) {
  std::printf("%-18s  %10.3f ms  %10.3f ms  %6.2fx\n", name, serial_s * 1e3,
              parallel_s * 1e3, serial_s / parallel_s);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled at build time\n");
#endif

  Rng rng(2026);
  const std::size_t n = 2000;
  const std::size_t k = 10;

  std::vector<double> big(4'000'000);
  for (double& x : big) x = rng.uniform() - 0.5;

  std::vector<double> a(n * k), b(n * k);
  for (double& x : a) x = rng.uniform();
  for (double& x : b) x = rng.uniform();

  std::vector<double> cost(n * n);
  for (double& x : cost) x = rng.uniform();
  std::vector<double> u(n), v(n);
  for (double& x : u) x = rng.uniform() - 0.5;
  for (double& x : v) x = rng.uniform() - 0.5;

  std::printf("%-18s  %13s  %13s  %7s\n", "kernel", "serial", "openmp",
              "speedup");

  double sink = 0.0;
  row("sum (4e6)",
      seconds_best_of(5, [&] { sink += kernels::sum_serial(big); }),
      seconds_best_of(5, [&] { sink += kernels::sum(big); }));

  std::vector<double> out(n * n);
  row("l1 cost (2k x 2k)",
      seconds_best_of(3, [&] {
        kernels::l1_cost_matrix_serial(a.data(), n, b.data(), n, k, out.data());
      }),
      seconds_best_of(3, [&] {
        kernels::l1_cost_matrix(a.data(), n, b.data(), n, k, out.data());
      }));

  const auto arcs = static_cast<std::int64_t>(n * n);
  row("min reduced cost",
      seconds_best_of(5,
                      [&] {
                        const auto m = kernels::min_reduced_cost_serial(
                            cost.data(), u.data(), v.data(),
                            static_cast<std::int64_t>(n), 0, arcs);
                        sink += m.value;
                      }),
      seconds_best_of(5, [&] {
        const auto m = kernels::min_reduced_cost(
            cost.data(), u.data(), v.data(), static_cast<std::int64_t>(n), 0,
            arcs);
        sink += m.value;
      }));

  std::vector<double> soft(n * k);
  row("softmax rows",
      seconds_best_of(5,
                      [&] {
                        kernels::softmax_rows_serial(a.data(), n, k, 1.5,
                                                     soft.data());
                      }),
      seconds_best_of(5, [&] {
        kernels::softmax_rows(a.data(), n, k, 1.5, soft.data());
      }));

  // One realistic end-to-end solve: 2000 softmax rows against 2000 one-hot
  // atoms, the shape every COT batch takes at the default batch size.
  std::vector<double> rows(n * k);
  kernels::softmax_rows(a.data(), n, k, 2.0, rows.data());
  SoftmaxMatrix probs(k, std::move(rows));
  std::vector<std::int32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<std::int32_t>(rng.below(k));
  }
  const EmpiricalMeasure target = measure_from_rows(probs);
  const EmpiricalMeasure source = one_hot_measure(labels, k);
  const CostMatrix cm = build_cost_matrix(target, source);

  const auto t0 = std::chrono::steady_clock::now();
  const SolveDetails details = solve_emd_detailed(target, source, {});
  const auto t1 = std::chrono::steady_clock::now();
  std::printf("\nfull solve 2000x2000: %.3f s  (%lld pivots, emd %.6g)\n",
              std::chrono::duration<double>(t1 - t0).count(),
              static_cast<long long>(details.pivots),
              details.plan.total_cost);
  std::printf("(sink %g, cost[0] %g)\n", sink, cm.at(0, 0));
  return 0;
}
