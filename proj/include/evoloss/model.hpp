#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evoloss/keys.hpp"
#include "evoloss/param_set.hpp"
#include "evoloss/synthgen.hpp"
#include "evoloss/tape.hpp"

namespace evoloss {

struct ModelConfig {
  std::size_t embed_dim = 32;
  std::vector<std::size_t> hidden = {128, 64};  // per-frame affine+rectifier
  std::size_t decoder_hidden = 64;
  std::size_t predict_context = 6;  // frames fed to the future predictor
  std::size_t predict_horizon = 2;  // frames it must produce
  std::size_t align_window = 4;     // frames per alignment window
  std::size_t align_offset = 2;     // minimum misalignment shift
  double contrast_margin = 1.0;

  static ModelConfig full_scale();
  static ModelConfig small_scale();  // proxy networks used during evolution

  void validate(const DatasetConfig& data) const;
  bool operator==(const ModelConfig&) const = default;
};

// Every network of one experiment in a single ParamSet: four per-frame
// encoders (enc.<modality>.*), one decoder per reconstruction / prediction /
// cross-modal key (dec.<KEY>.*), one logistic head per ordering / alignment
// key (head.<KEY>.*). Checkpoints are the ParamSet container.
class ModelBundle {
 public:
  ModelBundle(const DatasetConfig& data, const ModelConfig& model,
              std::uint64_t seed);

  const ParamSet& params() const { return params_; }
  ParamSet& params_mutable() { return params_; }
  const ModelConfig& config() const { return model_; }
  const DatasetConfig& data_config() const { return data_; }

  struct Embed {
    Var embedding;          // [clips, D] after temporal mean-pooling
    std::vector<Var> taps;  // per hidden layer, pre-pooling [rows, width]
  };

  // frames: [clips * frames_per_clip, frame_dim(m)] stacked frame-major.
  Embed embed_frames(Tape& tape, Modality m, Var frames,
                     std::size_t frames_per_clip) const;
  // Tape-free forward sharing the same kernels; returns the embedding only.
  DenseArray embed_frames_plain(Modality m, const DenseArray& frames,
                                std::size_t frames_per_clip) const;

  // Decoder for a key with task R, P or C: [clips, D] -> [clips, out_dim].
  Var decode(Tape& tape, const std::string& key, Var embedding) const;
  std::size_t decoder_out_dim(const std::string& key) const;

  // Logistic head for a key with task S, B or A: [clips, in] -> [clips].
  Var binary_prob(Tape& tape, const std::string& key, Var features) const;
  // Single-row convenience used by evaluation code and tests.
  double binary_predict(const std::string& key,
                        const DenseArray& features) const;

  static bool key_has_decoder(const std::string& key);
  static bool key_has_head(const std::string& key);
  std::size_t head_in_dim(const std::string& key) const;

  void save_params(const std::string& path) const;
  // Replaces parameter values from a checkpoint; the key set and every shape
  // must match this bundle's architecture.
  void load_params(const std::string& path);

 private:
  DatasetConfig data_;
  ModelConfig model_;
  ParamSet params_;

  std::string enc_name(Modality m, const char* kind, std::size_t layer) const;
};

}  // namespace evoloss
