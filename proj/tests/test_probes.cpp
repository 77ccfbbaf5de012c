#include <cmath>
#include <vector>

#include "doctest.h"

#include "evoloss/errors.hpp"
#include "evoloss/probes.hpp"
#include "evoloss/proxy.hpp"
#include "evoloss/rng.hpp"

using namespace evoloss;

namespace {

// Linearly separable blobs with row id = index.
struct LabeledBlobs {
  DenseArray X;
  std::vector<int> labels;
  std::vector<int> ids;
};

LabeledBlobs separable_blobs(std::size_t per_class, std::size_t classes,
                             std::uint64_t seed) {
  LabeledBlobs out;
  const std::size_t n = per_class * classes;
  out.X = DenseArray({n, 2});
  Rng rng(seed);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t row = c * per_class + i;
      out.X.at(row, 0) = 6.0 * static_cast<double>(c) + 0.1 * rng.normal();
      out.X.at(row, 1) = -3.0 * static_cast<double>(c) + 0.1 * rng.normal();
      out.labels.push_back(static_cast<int>(c));
      out.ids.push_back(static_cast<int>(row));
    }
  }
  return out;
}

ProbeConfig quick_probe_config() {
  ProbeConfig c;
  c.steps = 200;
  c.lr = 0.1;
  c.finetune_steps = 10;
  c.finetune_batch = 4;
  c.finetune_lr = 0.005;
  return c;
}

}  // namespace

TEST_CASE("protocol names round-trip") {
  for (EvalProtocol p : {EvalProtocol::KMeansProbe, EvalProtocol::LinearProbe,
                         EvalProtocol::FineTune}) {
    CHECK(protocol_from_name(protocol_name(p)) == p);
  }
  CHECK(protocol_name(EvalProtocol::KMeansProbe) == "kmeans");
  CHECK(protocol_name(EvalProtocol::LinearProbe) == "linear");
  CHECK(protocol_name(EvalProtocol::FineTune) == "finetune");
  CHECK_THROWS_AS(protocol_from_name("svm"), ValueError);
}

TEST_CASE("parity split separates even and odd clip ids") {
  std::vector<int> ids = {4, 7, 10, 13, 2, 9};
  std::vector<std::size_t> fit, score;
  split_by_parity(ids, fit, score);
  CHECK(fit == std::vector<std::size_t>{0, 2, 4});
  CHECK(score == std::vector<std::size_t>{1, 3, 5});

  std::vector<int> all_even = {2, 4, 6};
  CHECK_THROWS_AS(split_by_parity(all_even, fit, score), ValueError);
  std::vector<int> all_odd = {1, 3};
  CHECK_THROWS_AS(split_by_parity(all_odd, fit, score), ValueError);
}

TEST_CASE("kmeans probe is accurate on separable blobs") {
  LabeledBlobs blobs = separable_blobs(12, 3, 5);
  EvalResult r = kmeans_probe_eval(blobs.X, blobs.labels, blobs.ids, 3, 3, 17);
  CHECK(r.protocol == EvalProtocol::KMeansProbe);
  CHECK(r.fit_count == 18);
  CHECK(r.score_count == 18);
  CHECK(r.accuracy > 0.95);
  CHECK(r.accuracy <= 1.0);
}

TEST_CASE("linear probe fits separable blobs and is deterministic") {
  LabeledBlobs blobs = separable_blobs(10, 3, 8);
  ProbeConfig pc = quick_probe_config();
  EvalResult a = linear_probe_eval(blobs.X, blobs.labels, blobs.ids, 3, pc);
  EvalResult b = linear_probe_eval(blobs.X, blobs.labels, blobs.ids, 3, pc);
  CHECK(a.protocol == EvalProtocol::LinearProbe);
  CHECK(a.accuracy == b.accuracy);  // zero-init head, no sampling
  CHECK(a.accuracy > 0.9);
  CHECK(a.fit_count == 15);
  CHECK(a.score_count == 15);

  // Labels outside [0, num_classes) are rejected.
  std::vector<int> bad = blobs.labels;
  bad[0] = 7;
  CHECK_THROWS_AS(linear_probe_eval(blobs.X, bad, blobs.ids, 3, pc),
                  ValueError);
}

TEST_CASE("random embeddings score near chance under the linear probe") {
  Rng rng(15);
  const std::size_t n = 60;
  DenseArray X({n, 4});
  std::vector<int> labels(n), ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 4; ++j) X.at(i, j) = rng.normal();
    labels[i] = static_cast<int>(rng.uniform_index(3));
    ids[i] = static_cast<int>(i);
  }
  EvalResult r = linear_probe_eval(X, labels, ids, 3, quick_probe_config());
  CHECK(r.accuracy < 0.75);  // far from the separable regime
}

TEST_CASE("fine-tuning starts from the probe and stays comparable") {
  DatasetConfig dc;
  dc.num_clips = 14;
  dc.num_classes = 2;
  dc.frames = 6;
  dc.height = 5;
  dc.width = 5;
  dc.audio_rate = 10;
  dc.seed = 77;
  Dataset data = Dataset::generate(dc);

  ModelConfig mc;
  mc.embed_dim = 6;
  mc.hidden = {10, 8};
  mc.decoder_hidden = 8;
  mc.predict_context = 3;
  mc.predict_horizon = 2;
  mc.align_window = 2;
  mc.align_offset = 1;
  ModelBundle bundle(dc, mc, 4);

  std::vector<std::size_t> eval_idx = eval_split(data, 8);
  ProbeConfig pc = quick_probe_config();

  DenseArray E = embed_clips(bundle, data, eval_idx);
  std::vector<int> labels(eval_idx.size()), ids(eval_idx.size());
  for (std::size_t i = 0; i < eval_idx.size(); ++i) {
    labels[i] = data.label_of(eval_idx[i]);
    ids[i] = data.clips[eval_idx[i]].clip_id;
  }
  EvalResult linear = linear_probe_eval(E, labels, ids, dc.num_classes, pc);

  EvalResult tuned =
      fine_tune_eval(bundle, data, eval_idx, dc.num_classes, pc, 21);
  CHECK(tuned.protocol == EvalProtocol::FineTune);
  CHECK(tuned.fit_count == linear.fit_count);
  CHECK(tuned.score_count == linear.score_count);
  CHECK(tuned.accuracy >= 0.0);
  CHECK(tuned.accuracy <= 1.0);
  // Warm-started from the probe solution with a small learning rate, the
  // joint phase cannot fall far below the frozen probe.
  CHECK(tuned.accuracy >= linear.accuracy - 0.26);

  EvalResult again =
      fine_tune_eval(bundle, data, eval_idx, dc.num_classes, pc, 21);
  CHECK(again.accuracy == tuned.accuracy);
}
