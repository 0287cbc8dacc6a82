#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "maada/rng.hpp"
#include "maada/trainer.hpp"

using namespace maada;

namespace {

TrainConfig small_config() {
  TrainConfig config;
  config.layer_sizes = {8};
  config.epochs = 4;
  config.batch_size = 16;
  config.k = 5;
  config.m = 1;
  config.learning_rate = 0.1;
  config.seed = 3;
  return config;
}

TrainConfig erm_style(TrainConfig config) {
  config.weights = {0.0, 0.0, 0.0};
  config.alpha = 0.0;
  config.beta = 0.0;
  return config;
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (!(a.layers[l].weight == b.layers[l].weight)) return false;
    if (!(a.layers[l].bias == b.layers[l].bias)) return false;
  }
  return true;
}

// Everything but the wall clock, which is the one nondeterministic field.
bool records_equal(const EpochRecord& a, const EpochRecord& b) {
  return a.epoch == b.epoch && a.losses.l_src == b.losses.l_src &&
         a.losses.l_adv == b.losses.l_adv && a.losses.l_cons == b.losses.l_cons &&
         a.losses.l_align == b.losses.l_align && a.losses.l_total == b.losses.l_total &&
         a.source_accuracy == b.source_accuracy && a.target_accuracy == b.target_accuracy;
}

}  // namespace

TEST_CASE("config validation rejects out-of-range fields") {
  CHECK_THROWS_AS([] { TrainConfig c; c.alpha = -1.0; c.validate(); }(), ConfigError);
  CHECK_THROWS_AS([] { TrainConfig c; c.epochs = 0; c.validate(); }(), ConfigError);
  CHECK_THROWS_AS([] { TrainConfig c; c.learning_rate = 0.0; c.validate(); }(), ConfigError);
  CHECK_THROWS_AS([] { TrainConfig c; c.k = 1; c.m = 2; c.validate(); }(), ConfigError);
  CHECK_THROWS_AS([] { TrainConfig c; c.layer_sizes = {}; c.validate(); }(), ConfigError);
  TrainConfig ok;
  ok.validate();
}

TEST_CASE("disabled regularizers reproduce plain ERM bitwise") {
  Dataset source = gen_two_moons(80, 0.1, 11);
  Dataset target = rotate(gen_two_moons(80, 0.1, 12), 0.5, Domain::kTarget, true);

  TrainConfig config = erm_style(small_config());
  TrainResult maada_run = train(config, source, target);
  TrainResult erm_run = train_erm(config, source);

  CHECK(params_equal(maada_run.params, erm_run.params));
  REQUIRE(maada_run.log.records.size() == erm_run.log.records.size());
  for (std::size_t e = 0; e < maada_run.log.records.size(); ++e) {
    CHECK(records_equal(maada_run.log.records[e], erm_run.log.records[e]));
  }
}

TEST_CASE("same config and seed reproduce the run bitwise") {
  Dataset source = gen_two_moons(60, 0.1, 5);
  Dataset target = rotate(gen_two_moons(60, 0.1, 6), 0.4, Domain::kTarget, true);

  TrainConfig config = small_config();
  config.k = 5;
  TrainResult a = train(config, source, target);
  TrainResult b = train(config, source, target);

  CHECK(params_equal(a.params, b.params));
  REQUIRE(a.log.records.size() == b.log.records.size());
  for (std::size_t e = 0; e < a.log.records.size(); ++e) {
    CHECK(records_equal(a.log.records[e], b.log.records[e]));
  }
}

TEST_CASE("metrics log: one finite record per epoch") {
  Dataset source = gen_two_moons(60, 0.1, 7);
  Dataset target = rotate(gen_two_moons(60, 0.1, 8), 0.5, Domain::kTarget, true);
  TrainConfig config = small_config();
  TrainResult result = train(config, source, target);

  REQUIRE(result.log.records.size() == static_cast<std::size_t>(config.epochs));
  for (std::size_t e = 0; e < result.log.records.size(); ++e) {
    CHECK(result.log.records[e].epoch == static_cast<int>(e) + 1);
    CHECK(std::isfinite(result.log.records[e].losses.l_total));
    CHECK_FALSE(result.log.records[e].target_accuracy.has_value());  // unlabeled target
  }
}

TEST_CASE("target labels feed evaluation only, never the updates") {
  Dataset source = gen_two_moons(60, 0.1, 9);
  Dataset labeled_target = rotate(gen_two_moons(60, 0.1, 10), 0.5, Domain::kTarget, false);
  Dataset unlabeled_target = rotate(gen_two_moons(60, 0.1, 10), 0.5, Domain::kTarget, true);

  TrainConfig config = small_config();
  TrainResult with_labels = train(config, source, labeled_target);
  TrainResult without_labels = train(config, source, unlabeled_target);

  CHECK(params_equal(with_labels.params, without_labels.params));
  CHECK(with_labels.log.records.back().target_accuracy.has_value());
  CHECK_FALSE(without_labels.log.records.back().target_accuracy.has_value());
}

TEST_CASE("training requires a labeled source and matching dimensions") {
  Dataset source = gen_two_moons(40, 0.1, 1);
  Dataset target = rotate(gen_two_moons(40, 0.1, 2), 0.3, Domain::kTarget, true);

  Dataset unlabeled = rotate(source, 0.0, std::nullopt, true);
  CHECK_THROWS_AS(train(small_config(), unlabeled, target), DataError);

  Dataset wide;
  wide.x = Matrix(10, 3);
  wide.labels.assign(10, -1);
  wide.domains.assign(10, Domain::kTarget);
  CHECK_THROWS_AS(train(small_config(), source, wide), ConfigError);
}

TEST_CASE("non-finite loss aborts with epoch diagnostics") {
  Dataset source = gen_two_moons(40, 0.1, 13);
  Dataset target = rotate(gen_two_moons(40, 0.1, 14), 0.3, Domain::kTarget, true);
  TrainConfig config = erm_style(small_config());
  config.learning_rate = 1e30;
  config.epochs = 50;
  CHECK_THROWS_WITH_AS(train(config, source, target), doctest::Contains("epoch"),
                       TrainingError);
}

TEST_CASE("evaluate: perfect predictor, tie-break contract, hand count") {
  // Single layer with weights pushing class = sign(x0).
  ModelParams linear;
  linear.layers.push_back({Matrix(1, 2, {-5.0, 5.0}), Matrix(1, 2)});

  Dataset ds;
  ds.x = Matrix(4, 1, {-2.0, -1.0, 1.0, 2.0});
  ds.labels = {0, 0, 1, 1};
  ds.domains.assign(4, Domain::kSource);
  CHECK(evaluate(linear, ds).first == 1.0);

  // Zero model predicts class 0 everywhere; balanced set scores exactly 0.5.
  ModelParams zero;
  zero.layers.push_back({Matrix(1, 2), Matrix(1, 2)});
  CHECK(evaluate(zero, ds).first == 0.5);

  // Ten-point fixture counted by hand: threshold at x0 = 0 gets 7 of 10.
  Dataset fixture;
  fixture.x = Matrix(10, 1, {-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0, -0.25, 0.75});
  fixture.labels = {0, 0, 0, 1, 1, 1, 1, 0, 0, 0};
  fixture.domains.assign(10, Domain::kSource);
  CHECK(evaluate(linear, fixture).first == doctest::Approx(0.7));

  Dataset unlabeled = fixture;
  unlabeled.labels.assign(10, -1);
  CHECK_THROWS_AS(evaluate(linear, unlabeled), DataError);
}

TEST_CASE("erm training learns separable blobs") {
  Dataset blobs;
  blobs.x = Matrix(40, 2);
  blobs.labels.resize(40);
  blobs.domains.assign(40, Domain::kSource);
  Rng rng(99);
  for (std::size_t i = 0; i < 40; ++i) {
    const int label = i < 20 ? 0 : 1;
    blobs.x(i, 0) = (label == 0 ? -2.0 : 2.0) + 0.3 * rng.normal();
    blobs.x(i, 1) = 0.3 * rng.normal();
    blobs.labels[i] = label;
  }
  TrainConfig config = erm_style(small_config());
  config.epochs = 40;
  TrainResult result = train_erm(config, blobs);
  CHECK(evaluate(result.params, blobs).first == 1.0);
  CHECK(result.log.records.back().losses.l_src < 0.2);
}
