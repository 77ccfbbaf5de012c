#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evoloss/evolve.hpp"
#include "evoloss/losses.hpp"
#include "evoloss/model.hpp"
#include "evoloss/synthgen.hpp"

namespace evoloss {

enum class EncoderScale { Small, Full };

EncoderScale scale_from_name(const std::string& name);
std::string scale_name(EncoderScale scale);
ModelConfig model_config_for(EncoderScale scale);

// One self-supervised training run: mini-batch SGD with a cosine schedule.
// Proxy runs during evolution use small/short settings; the final train of
// the best genome reuses the same loop at full settings.
struct TrainConfig {
  std::size_t steps = 600;
  std::size_t batch_size = 4;
  double base_lr = 0.05;
  std::size_t warmup_steps = 30;
  double dataset_fraction = 1.0;  // prefix fraction of the train split
  EncoderScale scale = EncoderScale::Small;

  bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
  std::vector<double> step_loss;
  std::size_t steps_run = 0;
  bool finite = true;  // false when a non-finite loss aborted the run
};

// The last `eval_clips` ids are held out from all self-supervised training.
std::vector<std::size_t> train_split(const Dataset& data, std::size_t eval_clips);
std::vector<std::size_t> eval_split(const Dataset& data, std::size_t eval_clips);

TrainResult train_bundle(ModelBundle& bundle, const Dataset& data,
                         const LossWeights& weights,
                         const std::vector<std::size_t>& pool,
                         const TrainConfig& config, std::uint64_t seed);

// Main-modality embeddings of the listed clips, one row per clip, in order.
DenseArray embed_clips(const ModelBundle& bundle, const Dataset& data,
                       const std::vector<std::size_t>& indices);

// Fresh bundle + short training + eval-split embeddings, all seeded.
DenseArray proxy_embeddings(const LossWeights& weights, const Dataset& data,
                            const TrainConfig& config, std::size_t eval_clips,
                            std::uint64_t seed);

struct FitnessSettings {
  std::string kind = "elo";  // elo | weak | both
  std::size_t k = 0;         // cluster count; 0 -> dataset class count
  double s = 1.0;            // Zipf exponent
  std::size_t trials = 20;

  bool operator==(const FitnessSettings&) const = default;
};

// Scores a genome by proxy-training a model with it and clustering the
// eval-split embeddings. kind "elo" never touches labels; "weak" scores the
// label baseline; "both" reports elo as the fitness plus the weak score on
// the side (used for correlation studies).
FitnessFn make_proxy_fitness(const Dataset& data, const TrainConfig& config,
                             const FitnessSettings& settings,
                             std::size_t eval_clips);

}  // namespace evoloss
