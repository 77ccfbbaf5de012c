#pragma once

#include <cstdint>
#include <string>

#include "evoloss/evolve.hpp"
#include "evoloss/probes.hpp"
#include "evoloss/proxy.hpp"
#include "evoloss/synthgen.hpp"

namespace evoloss {

// Everything one experiment needs, round-trippable through JSON:
// parse(serialize(c)) == c. Unknown keys are rejected so typos cannot
// silently fall back to defaults.
struct ExperimentConfig {
  int version = 1;
  DatasetConfig dataset;
  FitnessSettings fitness;

  std::string strategy = "cmaes";
  std::size_t budget = 60;
  std::size_t tournament_capacity = 25;
  std::size_t tournament_size = 5;
  std::size_t grid_levels = 2;
  std::size_t cma_lambda = 0;  // 0 -> 4 + floor(3 ln d)
  double cma_sigma0 = 0.3;

  // Short runs scoring genomes during evolution.
  TrainConfig proxy;
  // Final training of the best genome.
  TrainConfig train = {.steps = 5000,
                       .batch_size = 8,
                       .base_lr = 0.05,
                       .warmup_steps = 100,
                       .dataset_fraction = 1.0,
                       .scale = EncoderScale::Full};
  ProbeConfig probe;
  std::size_t eval_clips = 2048;

  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string dataset_path;  // empty -> <out_dir>/dataset.bin

  bool operator==(const ExperimentConfig&) const = default;

  std::string resolved_dataset_path() const;
  std::string labels_path() const;  // sidecar next to the dataset
  EvolveOptions evolve_options(std::size_t dim) const;
  void validate() const;
};

ExperimentConfig default_config();

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& config, const std::string& path);

}  // namespace evoloss
