#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cot/errors.hpp"
#include "cot/rng.hpp"
#include "cot/synth.hpp"
#include "cot/types.hpp"

using namespace cot;

namespace {

SynthConfig small_config() {
  SynthConfig config;
  config.num_classes = 4;
  config.label_dist = LabelDistribution::uniform(4);
  config.n_samples = 500;
  config.seed = 11;
  return config;
}

}  // namespace

TEST_CASE("noiseless accurate generator reproduces its labels exactly") {
  SynthConfig config = small_config();
  config.accuracy = 1.0;
  config.logit_noise = 1e-9;
  const LogitsDataset data = generate(config);
  REQUIRE(data.size() == 500);
  REQUIRE(data.fully_labeled());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(argmax_index(data.row(i)) ==
          static_cast<std::size_t>(*data.label(i)));
  }
  CHECK(argmax_error(data) == 0.0);
}

TEST_CASE("true error tracks one minus accuracy when noise is subdominant") {
  SynthConfig config;
  config.num_classes = 10;
  config.label_dist = LabelDistribution::uniform(10);
  config.n_samples = 10000;
  config.accuracy = 0.8;
  config.logit_margin = 6.0;
  config.logit_noise = 1.0;
  config.seed = 3;
  const double error = argmax_error(generate(config));
  // Binomial noise at n=10000 is ~0.004; margin/noise = 6 keeps flips rare.
  CHECK(error == doctest::Approx(0.2).epsilon(0.1));
  CHECK(std::abs(error - 0.2) < 0.02);
}

TEST_CASE("default margin and noise make label flips negligible") {
  SynthConfig config;
  config.n_samples = 20000;
  config.accuracy = 1.0;
  config.seed = 9;
  CHECK(argmax_error(generate(config)) == 0.0);
}

TEST_CASE("generation is bitwise deterministic") {
  const SynthConfig config = small_config();
  const LogitsDataset a = generate(config);
  const LogitsDataset b = generate(config);
  CHECK(a.logits() == b.logits());
  CHECK(a.labels() == b.labels());
}

TEST_CASE("label marginals follow the requested distribution") {
  SynthConfig config;
  config.num_classes = 3;
  config.label_dist = LabelDistribution({0.5, 0.3, 0.2});
  config.n_samples = 10000;
  config.seed = 21;
  const LogitsDataset data = generate(config);
  const LabelDistribution observed =
      empirical_label_distribution(required_labels(data), 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const double p = config.label_dist.prob(k);
    const double tolerance = 3.0 * std::sqrt(p * (1.0 - p) / 10000.0);
    CHECK(std::abs(observed.prob(k) - p) <= tolerance);
  }
}

TEST_CASE("extra temperature rescales logits without moving any argmax") {
  SynthConfig base = small_config();
  base.accuracy = 0.7;
  SynthConfig heated = base;
  heated.extra_temperature = 2.5;

  const LogitsDataset cold = generate(base);
  const LogitsDataset hot = generate(heated);
  REQUIRE(cold.logits().size() == hot.logits().size());
  for (std::size_t j = 0; j < cold.logits().size(); ++j) {
    CHECK(hot.logits()[j] == cold.logits()[j] * (1.0 / 2.5));
  }
  CHECK(cold.labels() == hot.labels());
  CHECK(argmax_error(hot) == argmax_error(cold));
}

TEST_CASE("argmax_error rejects unlabeled rows") {
  LogitsDataset data(2, {std::optional<std::int32_t>{0}, std::nullopt},
                     {1.0, 0.0, 0.0, 1.0});
  CHECK_THROWS_WITH_AS(static_cast<void>(argmax_error(data)),
                       doctest::Contains("row 1"), ValidationError);
}

TEST_CASE("shift_sweep yields one target per severity with matching error") {
  const SynthConfig base = small_config();
  CHECK(shift_sweep(base, {}).empty());

  const std::vector<std::pair<double, double>> severities = {{0.85, 1.0}};
  const auto targets = shift_sweep(base, severities);
  REQUIRE(targets.size() == 1);

  SynthConfig replica = base;
  replica.accuracy = 0.85;
  replica.seed = substream_seed(base.seed, 0);
  const LogitsDataset expected = generate(replica);
  CHECK(targets[0].data.logits() == expected.logits());
  CHECK(targets[0].true_error == argmax_error(expected));
}

TEST_CASE("sweep errors grow as accuracy decays") {
  SynthConfig base;
  base.n_samples = 10000;
  base.seed = 33;
  const auto targets =
      shift_sweep(base, {{0.9, 1.0}, {0.7, 1.3}, {0.5, 1.6}});
  REQUIRE(targets.size() == 3);
  CHECK(targets[0].true_error < targets[1].true_error);
  CHECK(targets[1].true_error < targets[2].true_error);
  CHECK(targets[0].true_error == doctest::Approx(0.1).epsilon(0.15));
  CHECK(targets[2].true_error == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("config validation rejects out-of-range parameters") {
  CHECK_NOTHROW(small_config().validate());

  SynthConfig config = small_config();
  config.num_classes = 1;
  CHECK_THROWS_AS(config.validate(), ValidationError);

  config = small_config();
  config.label_dist = LabelDistribution::uniform(5);
  CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("label_dist"),
                       ValidationError);

  config = small_config();
  config.n_samples = 0;
  CHECK_THROWS_AS(config.validate(), ValidationError);

  config = small_config();
  config.accuracy = 0.0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config.accuracy = 1.2;
  CHECK_THROWS_AS(config.validate(), ValidationError);

  config = small_config();
  config.extra_temperature = 0.8;
  CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains(">= 1"),
                       ValidationError);

  config = small_config();
  config.logit_margin = 0.0;
  CHECK_THROWS_AS(config.validate(), ValidationError);

  config = small_config();
  config.logit_noise = -1.0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
}

TEST_CASE("simulate spec validation") {
  SimulateSpec spec = default_simulate_spec();
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.severities.size() == 15);

  spec.source.extra_temperature = 1.5;
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("source"),
                       ValidationError);

  spec = default_simulate_spec();
  spec.severities.clear();
  CHECK_THROWS_AS(spec.validate(), ValidationError);

  spec = default_simulate_spec();
  spec.n_target = 0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);

  spec = default_simulate_spec();
  spec.severities.push_back({0.5, 0.5});
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}
