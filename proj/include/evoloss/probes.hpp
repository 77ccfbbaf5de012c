#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evoloss/model.hpp"
#include "evoloss/synthgen.hpp"

namespace evoloss {

struct ProbeConfig {
  std::size_t steps = 1000;  // linear probe full-batch steps
  double lr = 0.05;
  std::size_t finetune_steps = 300;
  std::size_t finetune_batch = 32;
  double finetune_lr = 0.01;

  bool operator==(const ProbeConfig&) const = default;
};

enum class EvalProtocol { KMeansProbe, LinearProbe, FineTune };

EvalProtocol protocol_from_name(const std::string& name);
std::string protocol_name(EvalProtocol protocol);

struct EvalResult {
  EvalProtocol protocol = EvalProtocol::KMeansProbe;
  double accuracy = 0.0;
  std::size_t fit_count = 0;    // rows used to fit the probe
  std::size_t score_count = 0;  // held-out rows behind `accuracy`
};

// Even clip ids fit the probe, odd ids are scored; both halves live inside
// the eval split, which never saw self-supervised training.
void split_by_parity(const std::vector<int>& ids,
                     std::vector<std::size_t>& fit_rows,
                     std::vector<std::size_t>& score_rows);

// Label-vote clustering accuracy on frozen embeddings.
EvalResult kmeans_probe_eval(const DenseArray& embeddings,
                             const std::vector<int>& labels,
                             const std::vector<int>& ids, std::size_t k,
                             std::size_t trials, std::uint64_t seed);

// Softmax affine head on frozen embeddings, full-batch gradient descent with
// a cosine schedule. Deterministic: the head starts at zero.
EvalResult linear_probe_eval(const DenseArray& embeddings,
                             const std::vector<int>& labels,
                             const std::vector<int>& ids,
                             std::size_t num_classes,
                             const ProbeConfig& config);

// Linear probe first, then joint mini-batch updates of head plus main
// encoder, starting from the probe solution so accuracy cannot collapse.
EvalResult fine_tune_eval(const ModelBundle& trained, const Dataset& data,
                          const std::vector<std::size_t>& eval_indices,
                          std::size_t num_classes, const ProbeConfig& config,
                          std::uint64_t seed);

}  // namespace evoloss
