#include "cot/synth.hpp"

#include <cmath>
#include <string>

#include "cot/errors.hpp"
#include "cot/rng.hpp"

namespace cot {

namespace {

void check(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

void validate_severity(double accuracy, double extra_temperature) {
  check(accuracy > 0.0 && accuracy <= 1.0,
        "accuracy " + std::to_string(accuracy) + " outside (0, 1]");
  check(std::isfinite(extra_temperature) && extra_temperature >= 1.0,
        "extra_temperature " + std::to_string(extra_temperature) +
            " must be >= 1");
}

}  // namespace

void SynthConfig::validate() const {
  check(num_classes >= 2, "num_classes must be at least 2");
  check(label_dist.num_classes() == num_classes,
        "label_dist has " + std::to_string(label_dist.num_classes()) +
            " classes, config says " + std::to_string(num_classes));
  check(n_samples >= 1, "n_samples must be positive");
  validate_severity(accuracy, extra_temperature);
  check(std::isfinite(logit_margin) && logit_margin > 0.0,
        "logit_margin must be positive");
  check(std::isfinite(logit_noise) && logit_noise > 0.0,
        "logit_noise must be positive");
}

LogitsDataset generate(const SynthConfig& config) {
  config.validate();
  const std::size_t n = config.n_samples;
  const std::size_t k_classes = config.num_classes;

  std::vector<double> cdf(k_classes);
  double cum = 0.0;
  for (std::size_t k = 0; k < k_classes; ++k) {
    cum += config.label_dist.prob(k);
    cdf[k] = cum;
  }

  std::vector<std::optional<std::int32_t>> labels(n);
  std::vector<double> logits(n * k_classes);
  const double inv_tau = 1.0 / config.extra_temperature;

  // One decorrelated substream per row keeps generation order-independent,
  // so rows can be filled concurrently without changing the dataset.
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    Rng rng(substream_seed(config.seed, i));

    const double u_label = rng.uniform();
    std::int32_t y = static_cast<std::int32_t>(k_classes) - 1;
    for (std::size_t k = 0; k + 1 < k_classes; ++k) {
      if (u_label < cdf[k]) {
        y = static_cast<std::int32_t>(k);
        break;
      }
    }

    std::int32_t aim = y;
    if (rng.uniform() >= config.accuracy) {
      const std::uint64_t other = rng.below(k_classes - 1);
      aim = static_cast<std::int32_t>(
          other >= static_cast<std::uint64_t>(y) ? other + 1 : other);
    }

    double* row = logits.data() + i * k_classes;
    for (std::size_t k = 0; k < k_classes; ++k) {
      const double margin =
          static_cast<std::int32_t>(k) == aim ? config.logit_margin : 0.0;
      row[k] = (margin + config.logit_noise * rng.normal()) * inv_tau;
    }
    labels[i] = y;
  }

  return LogitsDataset(k_classes, std::move(labels), std::move(logits));
}

double argmax_error(const LogitsDataset& data) {
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.label(i)) {
      throw ValidationError("row " + std::to_string(i) +
                            " is unlabeled; cannot score argmax error");
    }
    if (argmax_index(data.row(i)) !=
        static_cast<std::size_t>(*data.label(i))) {
      ++wrong;
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

std::vector<SweepTarget> shift_sweep(
    const SynthConfig& base,
    const std::vector<std::pair<double, double>>& severities) {
  base.validate();
  for (const auto& [accuracy, extra_temperature] : severities) {
    validate_severity(accuracy, extra_temperature);
  }
  std::vector<SweepTarget> targets;
  targets.reserve(severities.size());
  for (std::size_t idx = 0; idx < severities.size(); ++idx) {
    SynthConfig config = base;
    config.accuracy = severities[idx].first;
    config.extra_temperature = severities[idx].second;
    config.seed = substream_seed(base.seed, idx);
    LogitsDataset data = generate(config);
    const double true_error = argmax_error(data);
    targets.push_back({std::move(data), true_error});
  }
  return targets;
}

void SimulateSpec::validate() const {
  source.validate();
  check(source.extra_temperature == 1.0,
        "source extra_temperature must be 1 (in-distribution data)");
  check(n_target >= 1, "n_target must be positive");
  check(!severities.empty(), "sweep needs at least one severity");
  for (const auto& [accuracy, extra_temperature] : severities) {
    validate_severity(accuracy, extra_temperature);
  }
}

SimulateSpec default_simulate_spec() {
  SimulateSpec spec;
  spec.source.num_classes = 10;
  spec.source.n_samples = 2000;
  spec.source.label_dist = LabelDistribution(
      {0.25, 0.19, 0.14, 0.10, 0.08, 0.06, 0.05, 0.05, 0.04, 0.04});
  spec.source.accuracy = 0.9;
  spec.source.logit_margin = 6.0;
  spec.source.logit_noise = 0.5;
  spec.source.extra_temperature = 1.0;
  spec.source.seed = 7;
  spec.n_target = 2000;
  spec.severities = {
      {0.88, 1.00}, {0.84, 1.05}, {0.80, 1.10}, {0.76, 1.15}, {0.72, 1.20},
      {0.68, 1.30}, {0.64, 1.40}, {0.60, 1.50}, {0.56, 1.60}, {0.52, 1.70},
      {0.48, 1.85}, {0.44, 2.00}, {0.40, 2.15}, {0.36, 2.30}, {0.32, 2.45},
  };
  return spec;
}

}  // namespace cot
