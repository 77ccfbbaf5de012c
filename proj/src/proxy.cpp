#include "evoloss/proxy.hpp"

#include <cmath>

#include "evoloss/errors.hpp"
#include "evoloss/fitness.hpp"
#include "evoloss/keys.hpp"
#include "evoloss/optim.hpp"
#include "evoloss/tape.hpp"

namespace evoloss {

EncoderScale scale_from_name(const std::string& name) {
  if (name == "small") return EncoderScale::Small;
  if (name == "full") return EncoderScale::Full;
  throw ValueError("unknown encoder scale '" + name +
                   "' (expected small or full)");
}

std::string scale_name(EncoderScale scale) {
  return scale == EncoderScale::Small ? "small" : "full";
}

ModelConfig model_config_for(EncoderScale scale) {
  return scale == EncoderScale::Small ? ModelConfig::small_scale()
                                      : ModelConfig::full_scale();
}

std::vector<std::size_t> train_split(const Dataset& data,
                                     std::size_t eval_clips) {
  const std::size_t n = data.clips.size();
  if (eval_clips == 0 || eval_clips >= n)
    throw ValueError("eval split of " + std::to_string(eval_clips) +
                     " clips does not leave a training split (dataset has " +
                     std::to_string(n) + ")");
  std::vector<std::size_t> idx(n - eval_clips);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

std::vector<std::size_t> eval_split(const Dataset& data,
                                    std::size_t eval_clips) {
  const std::size_t n = data.clips.size();
  if (eval_clips == 0 || eval_clips >= n)
    throw ValueError("eval split of " + std::to_string(eval_clips) +
                     " clips does not leave a training split (dataset has " +
                     std::to_string(n) + ")");
  std::vector<std::size_t> idx(eval_clips);
  for (std::size_t i = 0; i < eval_clips; ++i) idx[i] = n - eval_clips + i;
  return idx;
}

TrainResult train_bundle(ModelBundle& bundle, const Dataset& data,
                         const LossWeights& weights,
                         const std::vector<std::size_t>& pool,
                         const TrainConfig& config, std::uint64_t seed) {
  if (pool.size() < 2)
    throw ValueError("training pool needs at least 2 clips, got " +
                     std::to_string(pool.size()));
  if (config.batch_size < 2)
    throw ValueError("batch_size must be at least 2 (negatives come from the "
                     "batch), got " +
                     std::to_string(config.batch_size));
  if (!(config.dataset_fraction > 0.0) || config.dataset_fraction > 1.0)
    throw ValueError("dataset_fraction must be in (0, 1]");
  std::size_t usable = static_cast<std::size_t>(
      std::floor(config.dataset_fraction * static_cast<double>(pool.size())));
  usable = std::min(pool.size(), std::max<std::size_t>(2, usable));

  Rng rng(seed);
  TrainResult res;
  res.step_loss.reserve(config.steps);
  std::vector<std::size_t> batch_idx(config.batch_size);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const double lr = cosine_warmup_lr(step, config.steps, config.base_lr,
                                       config.warmup_steps);
    for (std::size_t b = 0; b < config.batch_size; ++b)
      batch_idx[b] = pool[rng.uniform_index(usable)];
    Batch batch = make_batch(data, batch_idx, bundle.config(), rng);
    Tape tape(bundle.params());
    Var loss = total_loss(tape, weights, bundle, data, batch);
    const double loss_value = tape.value(loss).data()[0];
    res.step_loss.push_back(loss_value);
    if (!std::isfinite(loss_value)) {
      res.finite = false;
      return res;
    }
    GradSet grads = tape.backward(loss);
    sgd_step(bundle.params_mutable(), grads, lr);
    ++res.steps_run;
  }
  return res;
}

DenseArray embed_clips(const ModelBundle& bundle, const Dataset& data,
                       const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ValueError("embed_clips: empty index list");
  const std::size_t frames = data.config.frames;
  const std::size_t dim = data.config.frame_dim(Modality::Main);
  const std::size_t emb = bundle.config().embed_dim;
  DenseArray out = DenseArray::zeros({indices.size(), emb});
  constexpr std::size_t kChunk = 64;
  DenseArray stack = DenseArray::zeros({kChunk * frames, dim});
  for (std::size_t at = 0; at < indices.size(); at += kChunk) {
    const std::size_t take = std::min(kChunk, indices.size() - at);
    if (take * frames != stack.rows())
      stack = DenseArray::zeros({take * frames, dim});
    for (std::size_t c = 0; c < take; ++c) {
      const std::size_t clip = indices[at + c];
      if (clip >= data.clips.size())
        throw ValueError("embed_clips: clip index out of range");
      copy_frames(data.clips[clip], Modality::Main, 0, frames,
                  stack.data() + c * frames * dim);
    }
    DenseArray rows = bundle.embed_frames_plain(Modality::Main, stack, frames);
    for (std::size_t c = 0; c < take; ++c)
      for (std::size_t j = 0; j < emb; ++j)
        out.at(at + c, j) = rows.at(c, j);
  }
  return out;
}

DenseArray proxy_embeddings(const LossWeights& weights, const Dataset& data,
                            const TrainConfig& config, std::size_t eval_clips,
                            std::uint64_t seed) {
  ModelBundle bundle(data.config, model_config_for(config.scale), seed);
  std::vector<std::size_t> pool = train_split(data, eval_clips);
  TrainResult result =
      train_bundle(bundle, data, weights, pool, config, seed ^ 0x74726169u);
  if (!result.finite)
    throw ValueError("non-finite loss at proxy training step " +
                     std::to_string(result.steps_run));
  return embed_clips(bundle, data, eval_split(data, eval_clips));
}

FitnessFn make_proxy_fitness(const Dataset& data, const TrainConfig& config,
                             const FitnessSettings& settings,
                             std::size_t eval_clips) {
  if (settings.kind != "elo" && settings.kind != "weak" &&
      settings.kind != "both")
    throw ValueError("unknown fitness kind '" + settings.kind +
                     "' (expected elo, weak or both)");
  const bool wants_weak = settings.kind != "elo";
  if (wants_weak && !data.labels_loaded)
    throw ValueError("fitness kind '" + settings.kind +
                     "' needs the label sidecar, which is not loaded");
  const Dataset* dataset = &data;
  const std::size_t k =
      settings.k != 0 ? settings.k : data.config.num_classes;
  return [dataset, config, settings, eval_clips, k, wants_weak](
             const DenseArray& genome, std::uint64_t eval_seed) {
    LossWeights weights(genome);
    DenseArray embeddings =
        proxy_embeddings(weights, *dataset, config, eval_clips, eval_seed);
    FitnessOutcome out;
    if (settings.kind != "weak") {
      FitnessReport report = elo_fitness(embeddings, k, settings.s,
                                         settings.trials, eval_seed);
      out.fitness = report.fitness;
      out.per_trial_kl = report.per_trial_kl;
    }
    if (wants_weak) {
      std::vector<std::size_t> eval_idx = eval_split(*dataset, eval_clips);
      std::vector<int> labels(eval_idx.size());
      std::vector<int> ids(eval_idx.size());
      for (std::size_t i = 0; i < eval_idx.size(); ++i) {
        labels[i] = dataset->label_of(eval_idx[i]);
        ids[i] = dataset->clips[eval_idx[i]].clip_id;
      }
      const double weak = weak_fitness(embeddings, labels, ids, k,
                                       settings.trials, eval_seed);
      out.weak_fitness = weak;
      if (settings.kind == "weak") out.fitness = weak;
    }
    return out;
  };
}

}  // namespace evoloss
