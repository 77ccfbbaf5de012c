#pragma once

#include <map>
#include <string>
#include <vector>

#include "evoloss/model.hpp"

namespace evoloss {

// The genome: one weight in [0,1] per canonical key, stored in canonical
// order. This vector is what evolution searches over.
class LossWeights {
 public:
  LossWeights();  // all weights zero
  explicit LossWeights(const DenseArray& genome);
  static LossWeights constant(double value);

  double get(const std::string& key) const;
  void set(const std::string& key, double value);

  const std::vector<double>& raw() const { return values_; }
  DenseArray genome() const;

  // Text format, one line per key in canonical order: `KEY = value` with 17
  // significant digits (value round-trips bit-exactly). '#' starts a comment.
  void save(const std::string& path) const;
  static LossWeights load(const std::string& path);

  bool operator==(const LossWeights&) const = default;

 private:
  std::vector<double> values_;
};

// Reference scalar forms of the task losses. The training path computes the
// same quantities through the tape; these are the plain-arithmetic versions
// used for evaluation and as test anchors.
double recon_loss(const DenseArray& predicted, const DenseArray& target);
double bce_loss(double p, double y);
double contrastive_loss(const DenseArray& x1, const DenseArray& x2,
                        const DenseArray& xn, double alpha);
double distill_loss(const DenseArray& aux_tap, const DenseArray& main_tap);

// One mini-batch: member clips, their batch partner (negative source), and
// the per-clip binary task samples. The shuffle/reverse permutation and the
// alignment windows are shared by every modality of the clip.
struct BatchItem {
  std::size_t clip = 0;
  std::size_t partner = 0;
  TaskSample shuffle;
  TaskSample reverse;
  TaskSample align;
};

struct Batch {
  std::vector<BatchItem> items;
  std::size_t size() const { return items.size(); }
};

// Draws task samples for the given clips. Needs >= 2 clips because
// contrastive and alignment negatives come from the next batch member.
Batch make_batch(const Dataset& data,
                 const std::vector<std::size_t>& clip_indices,
                 const ModelConfig& model, Rng& rng);

struct LossBreakdown {
  // Unweighted per-key values; keys with weight zero are skipped during
  // computation and reported as 0.
  std::map<std::string, double> parts;
  double total = 0.0;
};

// Builds the weighted multi-task loss graph for one batch and returns the
// scalar total. Zero-weight terms cost nothing; encoder passes are shared
// between the terms that need them.
Var total_loss(Tape& tape, const LossWeights& weights,
               const ModelBundle& bundle, const Dataset& data,
               const Batch& batch, LossBreakdown* breakdown = nullptr);

// Single alignment sample scored without gradients: embeds both windows,
// concatenates, applies the key's head, returns the binary cross-entropy.
double alignment_loss(const ModelBundle& bundle, const MultiModalClip& clip_a,
                      const MultiModalClip& clip_b, const TaskSample& sample,
                      const std::string& key);

}  // namespace evoloss
