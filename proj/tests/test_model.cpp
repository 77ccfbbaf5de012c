#include <cmath>
#include <cstdio>

#include "doctest.h"

#include "evoloss/errors.hpp"
#include "evoloss/model.hpp"

using namespace evoloss;

namespace {

DatasetConfig model_data_config() {
  DatasetConfig c;
  c.num_clips = 8;
  c.num_classes = 2;
  c.frames = 6;
  c.height = 5;
  c.width = 5;
  c.audio_rate = 10;
  c.seed = 17;
  return c;
}

ModelConfig model_test_config() {
  ModelConfig c;
  c.embed_dim = 6;
  c.hidden = {10, 8};
  c.decoder_hidden = 8;
  c.predict_context = 3;
  c.predict_horizon = 2;
  c.align_window = 2;
  c.align_offset = 1;
  return c;
}

// Stacked frames of one clip for one modality.
DenseArray clip_frames(const DatasetConfig& dc, const MultiModalClip& clip,
                       Modality m) {
  DenseArray x({dc.frames, dc.frame_dim(m)});
  copy_frames(clip, m, 0, dc.frames, x.data());
  return x;
}

}  // namespace

TEST_CASE("bundle holds encoders, decoders and heads for the full catalog") {
  DatasetConfig dc = model_data_config();
  ModelConfig mc = model_test_config();
  ModelBundle bundle(dc, mc, 1);
  const ParamSet& p = bundle.params();

  for (const char* modality : {"main", "grey", "flow", "audio"}) {
    for (const char* tensor : {"W1", "b1", "W2", "b2", "W3", "b3"}) {
      CHECK(p.contains(std::string("enc.") + modality + "." + tensor));
    }
  }

  std::size_t decoders = 0, heads = 0;
  for (const std::string& key : canonical_keys()) {
    const char task = parse_key(key).task;
    if (task == 'R' || task == 'P' || task == 'C') {
      CHECK(ModelBundle::key_has_decoder(key));
      CHECK_FALSE(ModelBundle::key_has_head(key));
      CHECK(p.contains("dec." + key + ".W2"));
      CHECK(p.get("dec." + key + ".W2").cols() == bundle.decoder_out_dim(key));
      ++decoders;
    } else if (task == 'S' || task == 'B' || task == 'A') {
      CHECK(ModelBundle::key_has_head(key));
      CHECK_FALSE(ModelBundle::key_has_decoder(key));
      CHECK(p.get("head." + key + ".W").size() == bundle.head_in_dim(key));
      ++heads;
    } else {
      // Distillation and contrastive terms need no extra parameters.
      CHECK((task == 'D' || task == 'E'));
      CHECK_FALSE(ModelBundle::key_has_decoder(key));
      CHECK_FALSE(ModelBundle::key_has_head(key));
    }
  }
  CHECK(decoders == 11);
  CHECK(heads == 11);
  // 4 encoders x 6 tensors, 4 per decoder, 2 per head.
  CHECK(p.count() == 4 * 6 + decoders * 4 + heads * 2);
}

TEST_CASE("decoder and head dimensions follow the task geometry") {
  DatasetConfig dc = model_data_config();
  ModelConfig mc = model_test_config();
  ModelBundle bundle(dc, mc, 1);

  CHECK(bundle.decoder_out_dim("RR") == dc.frames * dc.frame_dim(Modality::Main));
  CHECK(bundle.decoder_out_dim("GP") ==
        mc.predict_horizon * dc.frame_dim(Modality::Grey));
  CHECK(bundle.decoder_out_dim("RC") ==
        dc.frames * dc.frame_dim(Modality::Flow));
  CHECK(bundle.decoder_out_dim("FC") ==
        dc.frames * dc.frame_dim(Modality::Main));
  CHECK_THROWS_AS(bundle.decoder_out_dim("RS"), ValueError);

  CHECK(bundle.head_in_dim("RS") == mc.embed_dim);
  CHECK(bundle.head_in_dim("AB") == mc.embed_dim);
  CHECK(bundle.head_in_dim("GA") == 2 * mc.embed_dim);
  CHECK_THROWS_AS(bundle.head_in_dim("RR"), ValueError);

  CHECK(dc.frame_dim(Modality::Main) == dc.height * dc.width * 3);
  CHECK(dc.frame_dim(Modality::Grey) == dc.height * dc.width);
  CHECK(dc.frame_dim(Modality::Flow) == dc.height * dc.width * 2);
  CHECK(dc.frame_dim(Modality::Audio) == dc.audio_rate);
}

TEST_CASE("initialization is a pure function of the seed") {
  DatasetConfig dc = model_data_config();
  ModelConfig mc = model_test_config();
  ModelBundle a(dc, mc, 5), b(dc, mc, 5), c(dc, mc, 6);

  bool all_equal = true, any_diff_seed = false;
  for (const auto& [name, value] : a.params()) {
    const DenseArray& vb = b.params().get(name);
    const DenseArray& vc = c.params().get(name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (value[i] != vb[i]) all_equal = false;
      if (value[i] != vc[i]) any_diff_seed = true;
    }
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
}

TEST_CASE("tape and plain encoder forwards agree") {
  DatasetConfig dc = model_data_config();
  ModelConfig mc = model_test_config();
  ModelBundle bundle(dc, mc, 9);
  Dataset data = Dataset::generate(dc);

  for (Modality m :
       {Modality::Main, Modality::Grey, Modality::Flow, Modality::Audio}) {
    DenseArray frames = clip_frames(dc, data.clips[0], m);
    DenseArray plain = bundle.embed_frames_plain(m, frames, dc.frames);
    CHECK(plain.rows() == 1);
    CHECK(plain.cols() == mc.embed_dim);

    Tape tape(bundle.params());
    ModelBundle::Embed emb =
        bundle.embed_frames(tape, m, tape.constant(frames), dc.frames);
    const DenseArray& taped = tape.value(emb.embedding);
    REQUIRE(taped.size() == plain.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
      CHECK(taped[i] == plain[i]);
    }
    CHECK(emb.taps.size() == mc.hidden.size());
  }
}

TEST_CASE("mean pooling makes the embedding frame-order invariant") {
  DatasetConfig dc = model_data_config();
  ModelConfig mc = model_test_config();
  ModelBundle bundle(dc, mc, 9);
  Dataset data = Dataset::generate(dc);

  DenseArray frames = clip_frames(dc, data.clips[1], Modality::Main);
  DenseArray reversed({dc.frames, dc.frame_dim(Modality::Main)});
  copy_frames_permuted(data.clips[1], Modality::Main, {5, 4, 3, 2, 1, 0},
                       reversed.data());

  DenseArray a = bundle.embed_frames_plain(Modality::Main, frames, dc.frames);
  DenseArray b =
      bundle.embed_frames_plain(Modality::Main, reversed, dc.frames);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("embed_frames rejects inputs that do not stack evenly") {
  DatasetConfig dc = model_data_config();
  ModelBundle bundle(dc, model_test_config(), 9);
  DenseArray bad({dc.frames + 1, dc.frame_dim(Modality::Main)});
  CHECK_THROWS_AS(bundle.embed_frames_plain(Modality::Main, bad, dc.frames),
                  ShapeError);
  DenseArray wrong_dim({dc.frames, dc.frame_dim(Modality::Main) + 1});
  CHECK_THROWS_AS(
      bundle.embed_frames_plain(Modality::Main, wrong_dim, dc.frames),
      ShapeError);
}

TEST_CASE("binary_predict matches the taped head on a single row") {
  DatasetConfig dc = model_data_config();
  ModelConfig mc = model_test_config();
  ModelBundle bundle(dc, mc, 13);
  Rng rng(2);
  DenseArray feats({mc.embed_dim});
  for (std::size_t i = 0; i < feats.size(); ++i) feats[i] = rng.normal();

  const double direct = bundle.binary_predict("RS", feats);
  Tape tape(bundle.params());
  Var p = bundle.binary_prob(
      tape, "RS", tape.constant(feats.reshaped({1, mc.embed_dim})));
  CHECK(direct == tape.value(p)[0]);
  CHECK(direct > 0.0);
  CHECK(direct < 1.0);
  CHECK_THROWS_AS(bundle.binary_predict("RR", feats), ValueError);
}

TEST_CASE("checkpoints round-trip bit-exactly and reject other shapes") {
  DatasetConfig dc = model_data_config();
  ModelConfig mc = model_test_config();
  ModelBundle bundle(dc, mc, 3);
  const char* path = "model_test.ckpt";
  bundle.save_params(path);

  ModelBundle other(dc, mc, 4);
  other.load_params(path);
  for (const auto& [name, value] : bundle.params()) {
    const DenseArray& loaded = other.params().get(name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      CHECK(loaded[i] == value[i]);
    }
  }

  ModelConfig wider = mc;
  wider.embed_dim = 7;
  ModelBundle mismatched(dc, wider, 3);
  CHECK_THROWS_AS(mismatched.load_params(path), IoError);
  std::remove(path);
}
