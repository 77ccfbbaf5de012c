#include <cstdio>
#include <string>

#include "doctest.h"

#include "evoloss/config.hpp"
#include "evoloss/errors.hpp"

using namespace evoloss;

namespace {

ExperimentConfig customized_config() {
  ExperimentConfig c;
  c.dataset.num_clips = 256;
  c.dataset.num_classes = 5;
  c.dataset.zipf_s = 1.3;
  c.dataset.frames = 10;
  c.dataset.seed = 99;
  c.fitness.kind = "both";
  c.fitness.k = 7;
  c.fitness.s = 0.8;
  c.fitness.trials = 4;
  c.strategy = "tournament";
  c.budget = 33;
  c.tournament_capacity = 9;
  c.tournament_size = 4;
  c.grid_levels = 3;
  c.cma_lambda = 12;
  c.cma_sigma0 = 0.2;
  c.proxy.steps = 50;
  c.proxy.batch_size = 6;
  c.proxy.dataset_fraction = 0.5;
  c.proxy.scale = EncoderScale::Small;
  c.train.steps = 70;
  c.train.scale = EncoderScale::Full;
  c.probe.steps = 44;
  c.probe.finetune_lr = 0.003;
  c.eval_clips = 64;
  c.seed = 5;
  c.out_dir = "runs/x";
  c.dataset_path = "cached/data.bin";
  return c;
}

}  // namespace

TEST_CASE("config json round-trips to an equal struct") {
  ExperimentConfig a = default_config();
  CHECK(config_from_json(config_to_json(a)) == a);

  ExperimentConfig b = customized_config();
  CHECK(config_from_json(config_to_json(b)) == b);
  // Serialization is stable text.
  CHECK(config_to_json(b) == config_to_json(config_from_json(config_to_json(b))));
}

TEST_CASE("config files round-trip through disk") {
  const char* path = "config_test.json";
  ExperimentConfig c = customized_config();
  save_config(c, path);
  CHECK(load_config(path) == c);
  std::remove(path);
  CHECK_THROWS_AS(load_config(path), IoError);
}

TEST_CASE("absent keys keep defaults, unknown keys are named in the error") {
  ExperimentConfig partial = config_from_json(R"({"seed": 9})");
  ExperimentConfig expect = default_config();
  expect.seed = 9;
  CHECK(partial == expect);

  ExperimentConfig nested =
      config_from_json(R"({"evolve": {"strategy": "grid"}})");
  CHECK(nested.strategy == "grid");
  CHECK(nested.budget == default_config().budget);

  try {
    config_from_json(R"({"sede": 9})");
    FAIL_CHECK("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sede") != std::string::npos);
  }
  try {
    config_from_json(R"({"proxy": {"step": 5}})");
    FAIL_CHECK("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("'step'") != std::string::npos);
    CHECK(std::string(e.what()).find("proxy") != std::string::npos);
  }
}

TEST_CASE("malformed values and text are rejected") {
  CHECK_THROWS_AS(config_from_json("not json at all"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"([1, 2, 3])"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"seed": "many"})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"train": {"scale": "huge"}})"),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"version": 2})"), ConfigError);
}

TEST_CASE("validate rejects out-of-range settings") {
  auto broken = [](void (*mutate)(ExperimentConfig&)) {
    ExperimentConfig c = default_config();
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(
      broken([](ExperimentConfig& c) { c.strategy = "hillclimb"; }).validate(),
      ValueError);
  CHECK_THROWS_AS(
      broken([](ExperimentConfig& c) { c.fitness.kind = "oracle"; }).validate(),
      ConfigError);
  CHECK_THROWS_AS(
      broken([](ExperimentConfig& c) { c.budget = 0; }).validate(),
      ConfigError);
  CHECK_THROWS_AS(
      broken([](ExperimentConfig& c) { c.eval_clips = c.dataset.num_clips; })
          .validate(),
      ConfigError);
  CHECK_THROWS_AS(
      broken([](ExperimentConfig& c) { c.proxy.batch_size = 1; }).validate(),
      ConfigError);
  CHECK_THROWS_AS(
      broken([](ExperimentConfig& c) { c.train.dataset_fraction = 1.5; })
          .validate(),
      ConfigError);
  CHECK_THROWS_AS(
      broken([](ExperimentConfig& c) { c.probe.steps = 0; }).validate(),
      ConfigError);
  CHECK_THROWS_AS(
      broken([](ExperimentConfig& c) { c.out_dir.clear(); }).validate(),
      ConfigError);
  CHECK_NOTHROW(default_config().validate());
}

TEST_CASE("derived paths resolve against the output directory") {
  ExperimentConfig c = default_config();
  c.out_dir = "runs/a";
  CHECK(c.resolved_dataset_path() == "runs/a/dataset.bin");
  CHECK(c.labels_path() == "runs/a/dataset.bin.labels.tsv");
  c.dataset_path = "shared.bin";
  CHECK(c.resolved_dataset_path() == "shared.bin");
  CHECK(c.labels_path() == "shared.bin.labels.tsv");
}

TEST_CASE("evolve options mirror the experiment settings") {
  ExperimentConfig c = customized_config();
  EvolveOptions o = c.evolve_options(31);
  CHECK(o.strategy == Strategy::Tournament);
  CHECK(o.dim == 31);
  CHECK(o.budget == c.budget);
  CHECK(o.seed == c.seed);
  CHECK(o.tournament_capacity == c.tournament_capacity);
  CHECK(o.tournament_size == c.tournament_size);
  CHECK(o.grid_levels == c.grid_levels);
  CHECK(o.cma_lambda == c.cma_lambda);
  CHECK(o.cma_sigma0 == c.cma_sigma0);
}
