#include "evoloss/probes.hpp"

#include <cmath>

#include "evoloss/errors.hpp"
#include "evoloss/fitness.hpp"
#include "evoloss/optim.hpp"
#include "evoloss/proxy.hpp"
#include "evoloss/tape.hpp"

namespace evoloss {

EvalProtocol protocol_from_name(const std::string& name) {
  if (name == "kmeans") return EvalProtocol::KMeansProbe;
  if (name == "linear") return EvalProtocol::LinearProbe;
  if (name == "finetune") return EvalProtocol::FineTune;
  throw ValueError("unknown eval protocol '" + name +
                   "' (expected kmeans, linear or finetune)");
}

std::string protocol_name(EvalProtocol protocol) {
  switch (protocol) {
    case EvalProtocol::KMeansProbe: return "kmeans";
    case EvalProtocol::LinearProbe: return "linear";
    case EvalProtocol::FineTune: return "finetune";
  }
  throw ValueError("invalid eval protocol enum value");
}

void split_by_parity(const std::vector<int>& ids,
                     std::vector<std::size_t>& fit_rows,
                     std::vector<std::size_t>& score_rows) {
  fit_rows.clear();
  score_rows.clear();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] % 2 == 0)
      fit_rows.push_back(i);
    else
      score_rows.push_back(i);
  }
  if (fit_rows.empty() || score_rows.empty())
    throw ValueError("probe split needs both even and odd clip ids");
}

namespace {

DenseArray gather_rows(const DenseArray& x, const std::vector<std::size_t>& rows) {
  DenseArray out = DenseArray::zeros({rows.size(), x.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(rows[i], j);
  return out;
}

void check_labels(const std::vector<int>& labels, std::size_t num_classes) {
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes)
      throw ValueError("label " + std::to_string(l) +
                       " outside [0, " + std::to_string(num_classes) + ")");
}

// Full-batch softmax regression; weights start at zero, so the fit is
// deterministic.
ParamSet fit_linear_head(const DenseArray& x, const std::vector<int>& y,
                         std::size_t num_classes, std::size_t steps,
                         double base_lr) {
  ParamSet head;
  head.add("probe.W", DenseArray::zeros({x.cols(), num_classes}));
  head.add("probe.b", DenseArray::zeros({num_classes}));
  for (std::size_t step = 0; step < steps; ++step) {
    const double lr = cosine_warmup_lr(step, steps, base_lr, 0);
    Tape tape(head);
    Var logits = tape.affine(tape.constant(x), tape.leaf("probe.W"),
                             tape.leaf("probe.b"));
    Var loss = tape.softmax_ce(logits, y);
    if (!std::isfinite(tape.value(loss).data()[0]))
      throw ValueError("non-finite loss at linear probe step " +
                       std::to_string(step));
    GradSet grads = tape.backward(loss);
    sgd_step(head, grads, lr);
  }
  return head;
}

double head_accuracy(const ParamSet& head, const DenseArray& x,
                     const std::vector<int>& y) {
  DenseArray logits = matmul(x, head.get("probe.W"));
  add_rowvec_inplace(logits, head.get("probe.b"));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits.at(i, c) > logits.at(i, arg)) arg = c;
    if (static_cast<int>(arg) == y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

}  // namespace

EvalResult kmeans_probe_eval(const DenseArray& embeddings,
                             const std::vector<int>& labels,
                             const std::vector<int>& ids, std::size_t k,
                             std::size_t trials, std::uint64_t seed) {
  std::vector<std::size_t> fit_rows, score_rows;
  split_by_parity(ids, fit_rows, score_rows);
  EvalResult res;
  res.protocol = EvalProtocol::KMeansProbe;
  res.accuracy = weak_fitness(embeddings, labels, ids, k, trials, seed);
  res.fit_count = fit_rows.size();
  res.score_count = score_rows.size();
  return res;
}

EvalResult linear_probe_eval(const DenseArray& embeddings,
                             const std::vector<int>& labels,
                             const std::vector<int>& ids,
                             std::size_t num_classes,
                             const ProbeConfig& config) {
  if (embeddings.rows() != labels.size() || labels.size() != ids.size())
    throw ValueError("linear probe: embeddings, labels and ids disagree on length");
  check_labels(labels, num_classes);
  std::vector<std::size_t> fit_rows, score_rows;
  split_by_parity(ids, fit_rows, score_rows);
  DenseArray x_fit = gather_rows(embeddings, fit_rows);
  DenseArray x_score = gather_rows(embeddings, score_rows);
  std::vector<int> y_fit, y_score;
  for (std::size_t r : fit_rows) y_fit.push_back(labels[r]);
  for (std::size_t r : score_rows) y_score.push_back(labels[r]);
  ParamSet head =
      fit_linear_head(x_fit, y_fit, num_classes, config.steps, config.lr);
  EvalResult res;
  res.protocol = EvalProtocol::LinearProbe;
  res.accuracy = head_accuracy(head, x_score, y_score);
  res.fit_count = fit_rows.size();
  res.score_count = score_rows.size();
  return res;
}

EvalResult fine_tune_eval(const ModelBundle& trained, const Dataset& data,
                          const std::vector<std::size_t>& eval_indices,
                          std::size_t num_classes, const ProbeConfig& config,
                          std::uint64_t seed) {
  std::vector<int> labels(eval_indices.size());
  std::vector<int> ids(eval_indices.size());
  for (std::size_t i = 0; i < eval_indices.size(); ++i) {
    labels[i] = data.label_of(eval_indices[i]);
    ids[i] = data.clips[eval_indices[i]].clip_id;
  }
  check_labels(labels, num_classes);
  std::vector<std::size_t> fit_rows, score_rows;
  split_by_parity(ids, fit_rows, score_rows);

  DenseArray frozen = embed_clips(trained, data, eval_indices);
  DenseArray x_fit = gather_rows(frozen, fit_rows);
  std::vector<int> y_fit, y_score;
  for (std::size_t r : fit_rows) y_fit.push_back(labels[r]);
  for (std::size_t r : score_rows) y_score.push_back(labels[r]);
  ParamSet head =
      fit_linear_head(x_fit, y_fit, num_classes, config.steps, config.lr);

  // Joint phase over main encoder + head, starting from the probe solution.
  ParamSet joint;
  for (const auto& [name, value] : trained.params())
    if (name.rfind("enc.main.", 0) == 0) joint.add(name, value);
  joint.add("probe.W", head.get("probe.W"));
  joint.add("probe.b", head.get("probe.b"));

  const std::size_t frames = data.config.frames;
  const std::size_t dim = data.config.frame_dim(Modality::Main);
  Rng rng(seed);
  const std::size_t batch = std::min(config.finetune_batch, fit_rows.size());
  if (batch == 0) throw ValueError("fine-tune batch is empty");
  DenseArray stack = DenseArray::zeros({batch * frames, dim});
  for (std::size_t step = 0; step < config.finetune_steps; ++step) {
    const double lr =
        cosine_warmup_lr(step, config.finetune_steps, config.finetune_lr, 0);
    std::vector<int> y_batch(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t row = fit_rows[rng.uniform_index(fit_rows.size())];
      y_batch[b] = labels[row];
      copy_frames(data.clips[eval_indices[row]], Modality::Main, 0, frames,
                  stack.data() + b * frames * dim);
    }
    Tape tape(joint);
    ModelBundle::Embed e = trained.embed_frames(
        tape, Modality::Main, tape.constant(stack), frames);
    Var logits = tape.affine(e.embedding, tape.leaf("probe.W"),
                             tape.leaf("probe.b"));
    Var loss = tape.softmax_ce(logits, y_batch);
    if (!std::isfinite(tape.value(loss).data()[0]))
      throw ValueError("non-finite loss at fine-tune step " +
                       std::to_string(step));
    GradSet grads = tape.backward(loss);
    sgd_step(joint, grads, lr);
  }

  ModelBundle tuned = trained;
  for (const auto& [name, value] : joint)
    if (name.rfind("enc.main.", 0) == 0)
      tuned.params_mutable().get_mutable(name) = value;
  DenseArray tuned_emb = embed_clips(tuned, data, eval_indices);
  ParamSet scored_head;
  scored_head.add("probe.W", joint.get("probe.W"));
  scored_head.add("probe.b", joint.get("probe.b"));
  EvalResult res;
  res.protocol = EvalProtocol::FineTune;
  res.accuracy =
      head_accuracy(scored_head, gather_rows(tuned_emb, score_rows), y_score);
  res.fit_count = fit_rows.size();
  res.score_count = score_rows.size();
  return res;
}

}  // namespace evoloss
