#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cot/types.hpp"

namespace cot {

// Gaussian-logit classifier simulator: each sample draws a true label from
// label_dist, aims at it with probability `accuracy` (otherwise at a
// uniformly random other class), and emits logits
//   z_k = (margin * 1[k == aim] + noise * g_k) / extra_temperature
// with independent standard normal g_k. extra_temperature rescales all
// logits of a row equally, so it degrades confidence without moving any
// argmax: true error is a function of (seed, accuracy, margin, noise) only.
struct SynthConfig {
  std::size_t num_classes = 10;
  std::size_t n_samples = 2000;
  LabelDistribution label_dist = LabelDistribution::uniform(10);
  double accuracy = 0.9;
  double logit_margin = 6.0;
  double logit_noise = 0.5;
  double extra_temperature = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

LogitsDataset generate(const SynthConfig& config);

// Fraction of rows whose argmax differs from the recorded label.
double argmax_error(const LogitsDataset& data);

struct SweepTarget {
  LogitsDataset data;
  double true_error;
};

// One target per (accuracy, extra_temperature) pair; target i uses the
// i-th substream of base.seed.
std::vector<SweepTarget> shift_sweep(
    const SynthConfig& base,
    const std::vector<std::pair<double, double>>& severities);

// Simulation recipe for the CLI: one source plus a sweep of targets.
struct SimulateSpec {
  SynthConfig source;
  std::size_t n_target = 2000;
  std::vector<std::pair<double, double>> severities;

  void validate() const;
};

// Desk-scale default: K=10, skewed label distribution, 15 targets whose
// accuracy decays and extra_temperature grows along three severity tracks.
SimulateSpec default_simulate_spec();

}  // namespace cot
