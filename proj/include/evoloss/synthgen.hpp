#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evoloss/dense_array.hpp"
#include "evoloss/rng.hpp"

namespace evoloss {

enum class Modality { Main, Grey, Flow, Audio };

constexpr const char* kModalityNames[4] = {"main", "grey", "flow", "audio"};
const char* modality_name(Modality m);
// 1-letter genome-key prefix: R, G, F, A.
char modality_letter(Modality m);

struct DatasetConfig {
  std::size_t num_clips = 4096;
  std::size_t num_classes = 8;
  double zipf_s = 1.0;
  std::size_t frames = 8;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t audio_rate = 64;  // waveform samples per frame
  double noise_std = 0.05;
  std::uint64_t seed = 1;

  void validate() const;
  // Flattened per-frame input width of one modality.
  std::size_t frame_dim(Modality m) const;

  bool operator==(const DatasetConfig&) const = default;
};

// One synthetic clip: a moving 2-D Gaussian blob whose color, heading,
// curvature and speed are functions of the latent class, with synchronized
// grey, true-displacement flow, and sinusoid audio streams.
struct MultiModalClip {
  DenseArray main;   // [F,H,W,3], values in [0,1]
  DenseArray grey;   // [F,H,W,1], exact channel mean of main
  DenseArray flow;   // [F,H,W,2], displacement in pixels/frame
  DenseArray audio;  // [F*R], values in [-1,1]
  int latent_class = -1;  // -1 when labels have not been loaded
  int clip_id = 0;

  const DenseArray& modality(Modality m) const;
};

// Class i (0-based) with probability (1/(i+1)^s) / H_{C,s}.
int zipf_sample(std::size_t num_classes, double s, Rng& rng);

MultiModalClip generate_clip(int latent_class, const DatasetConfig& config,
                             Rng& rng);

// Per-pixel arithmetic channel mean: [..,3] -> [..,1].
DenseArray derive_grey(const DenseArray& main);

enum class TaskKind { Shuffle, Reverse, Align };

// One binary-task instance. Ordering samples carry the frame permutation to
// apply to every modality; alignment samples carry window placements. The
// arrays themselves are extracted at batch-assembly time.
struct TaskSample {
  TaskKind kind = TaskKind::Shuffle;
  double label = 1.0;  // 1 = in-order / forward / aligned
  std::vector<std::size_t> frame_perm;   // ordering: output f = input perm[f]
  std::size_t start_a = 0;               // alignment: first-stream window start
  std::size_t start_b = 0;               // alignment: second-stream window start
  std::size_t window = 0;                // alignment: window length in frames
  bool b_from_other = false;             // negative drawn from the other clip
};

// Label 1 with probability 0.5 (identity order), else label 0 with a
// uniformly random non-identity permutation (shuffle) or the reversal.
TaskSample make_shuffled(const MultiModalClip& clip, Rng& rng);
TaskSample make_reversed(const MultiModalClip& clip, Rng& rng);

// Aligned pair (label 1) of same-span windows, or misaligned pair (label 0)
// whose second window is shifted by >= offset_frames within the same clip or
// taken from clip_b; the two negative kinds are equally likely.
TaskSample make_misaligned(const MultiModalClip& clip_a,
                           const MultiModalClip& clip_b,
                           std::size_t window_frames,
                           std::size_t offset_frames, Rng& rng);

// Copies frames [start, start+count) of one modality as flattened rows into
// dst[count * frame_dim]; audio frames are R-sample blocks.
void copy_frames(const MultiModalClip& clip, Modality m, std::size_t start,
                 std::size_t count, double* dst);
// Same, but output frame f is input frame perm[f].
void copy_frames_permuted(const MultiModalClip& clip, Modality m,
                          const std::vector<std::size_t>& perm, double* dst);

struct Dataset {
  DatasetConfig config;
  std::vector<MultiModalClip> clips;
  bool labels_loaded = false;

  static Dataset generate(const DatasetConfig& config);

  // Container file: header with config, then per clip the main/flow/audio
  // payloads as named little-endian 32-bit floats. Grey is derived on load.
  // Latent classes are never written here; they live in the sidecar.
  void save(const std::string& path) const;
  static Dataset load(const std::string& path);

  // Sidecar text index "clip_id<TAB>class". Only label-consuming code paths
  // (weak fitness, probes) may load it.
  void save_labels(const std::string& path) const;
  void load_labels(const std::string& path);

  // Throws unless labels were generated or loaded from the sidecar.
  int label_of(std::size_t clip_index) const;
  std::vector<std::size_t> class_histogram() const;
};

}  // namespace evoloss
