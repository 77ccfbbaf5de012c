#include <cstdio>
#include <set>

#include "doctest.h"
#include "oracles.hpp"

#include "evoloss/errors.hpp"
#include "evoloss/synthgen.hpp"

using namespace evoloss;

namespace {

DatasetConfig tiny_config() {
  DatasetConfig c;
  c.num_clips = 24;
  c.num_classes = 4;
  c.frames = 6;
  c.height = 8;
  c.width = 8;
  c.audio_rate = 16;
  c.noise_std = 0.05;
  c.seed = 99;
  return c;
}

}  // namespace

TEST_CASE("zipf_sample follows the rank-frequency prior") {
  DatasetConfig c = tiny_config();
  Rng rng(500);
  const int draws = 60000;
  std::vector<int> counts(c.num_classes, 0);
  for (int i = 0; i < draws; ++i) {
    int k = zipf_sample(c.num_classes, 1.0, rng);
    REQUIRE(k >= 0);
    REQUIRE(k < static_cast<int>(c.num_classes));
    ++counts[k];
  }
  const double h = oracle::harmonic_naive(c.num_classes, 1.0);
  for (std::size_t i = 0; i < c.num_classes; ++i) {
    const double expect = draws / (static_cast<double>(i + 1) * h);
    CHECK(std::abs(counts[i] - expect) < 5.0 * std::sqrt(expect) + 30.0);
  }
}

TEST_CASE("generation is deterministic and clips are seed-local") {
  DatasetConfig c = tiny_config();
  Dataset a = Dataset::generate(c);
  Dataset b = Dataset::generate(c);
  REQUIRE(a.clips.size() == c.num_clips);
  for (std::size_t i = 0; i < c.num_clips; ++i) {
    CHECK(a.clips[i].main.values() == b.clips[i].main.values());
    CHECK(a.clips[i].audio.values() == b.clips[i].audio.values());
    CHECK(a.clips[i].latent_class == b.clips[i].latent_class);
  }
  // Regenerating one clip from its own stream reproduces the dataset's clip.
  Rng clip_rng(c.seed ^ static_cast<std::uint64_t>(a.clips[5].clip_id));
  MultiModalClip solo = generate_clip(a.clips[5].latent_class, c, clip_rng);
  CHECK(solo.main.values() == a.clips[5].main.values());
  CHECK(solo.flow.values() == a.clips[5].flow.values());
}

TEST_CASE("modality invariants: ranges, grey mean, static-class flow") {
  DatasetConfig c = tiny_config();
  Dataset d = Dataset::generate(c);
  for (const MultiModalClip& clip : d.clips) {
    for (std::size_t i = 0; i < clip.main.size(); ++i) {
      CHECK(clip.main.data()[i] >= 0.0);
      CHECK(clip.main.data()[i] <= 1.0);
    }
    for (std::size_t i = 0; i < clip.audio.size(); ++i) {
      CHECK(clip.audio.data()[i] >= -1.0);
      CHECK(clip.audio.data()[i] <= 1.0);
    }
    CHECK(clip.flow.all_finite());
    // Grey is the exact arithmetic channel mean of main.
    REQUIRE(clip.grey.size() * 3 == clip.main.size());
    for (std::size_t px = 0; px < clip.grey.size(); ++px) {
      const double want = (clip.main.data()[3 * px] +
                           clip.main.data()[3 * px + 1] +
                           clip.main.data()[3 * px + 2]) /
                          3.0;
      CHECK(clip.grey.data()[px] == want);
    }
    if (clip.latent_class == 0) {
      // Class 0 has zero speed; the true displacement field is zero.
      for (std::size_t i = 0; i < clip.flow.size(); ++i)
        CHECK(clip.flow.data()[i] == 0.0);
    }
  }
}

TEST_CASE("frame_dim matches the stored payload widths") {
  DatasetConfig c = tiny_config();
  Dataset d = Dataset::generate(c);
  const MultiModalClip& clip = d.clips[0];
  CHECK(clip.main.size() == c.frames * c.frame_dim(Modality::Main));
  CHECK(clip.grey.size() == c.frames * c.frame_dim(Modality::Grey));
  CHECK(clip.flow.size() == c.frames * c.frame_dim(Modality::Flow));
  CHECK(clip.audio.size() == c.frames * c.frame_dim(Modality::Audio));
}

TEST_CASE("class histogram covers all clips and matches labels") {
  DatasetConfig c = tiny_config();
  Dataset d = Dataset::generate(c);
  std::vector<std::size_t> hist = d.class_histogram();
  REQUIRE(hist.size() == c.num_classes);
  std::size_t total = 0;
  for (std::size_t n : hist) total += n;
  CHECK(total == c.num_clips);
  CHECK(d.label_of(3) == d.clips[3].latent_class);
}

TEST_CASE("container save/load round-trips and labels stay in the sidecar") {
  DatasetConfig c = tiny_config();
  Dataset d = Dataset::generate(c);
  const std::string path = "synthgen_test.bin";
  d.save(path);
  Dataset e = Dataset::load(path);
  CHECK(e.config == c);
  REQUIRE(e.clips.size() == d.clips.size());
  // Payloads are stored as f32; a second round-trip is exact.
  d.save(path);
  Dataset e2 = Dataset::load(path);
  for (std::size_t i = 0; i < e.clips.size(); ++i) {
    CHECK(e.clips[i].main.values() == e2.clips[i].main.values());
    CHECK(e.clips[i].clip_id == d.clips[i].clip_id);
    // Grey still equals the channel mean after quantization.
    for (std::size_t px = 0; px < 5; ++px) {
      const double want = (e.clips[i].main.data()[3 * px] +
                           e.clips[i].main.data()[3 * px + 1] +
                           e.clips[i].main.data()[3 * px + 2]) /
                          3.0;
      CHECK(e.clips[i].grey.data()[px] == want);
    }
  }
  CHECK_FALSE(e.labels_loaded);
  CHECK_THROWS_AS(e.label_of(0), ValueError);
  const std::string labels = "synthgen_test.labels.tsv";
  d.save_labels(labels);
  e.load_labels(labels);
  CHECK(e.labels_loaded);
  for (std::size_t i = 0; i < e.clips.size(); ++i)
    CHECK(e.label_of(i) == d.clips[i].latent_class);
  std::remove(path.c_str());
  std::remove(labels.c_str());
}

TEST_CASE("ordering task samples permute frames coherently") {
  DatasetConfig c = tiny_config();
  Dataset d = Dataset::generate(c);
  Rng rng(7);
  int positives = 0, negatives = 0;
  for (int i = 0; i < 40; ++i) {
    TaskSample s = make_shuffled(d.clips[i % d.clips.size()], rng);
    REQUIRE(s.frame_perm.size() == c.frames);
    std::set<std::size_t> seen(s.frame_perm.begin(), s.frame_perm.end());
    CHECK(seen.size() == c.frames);  // a permutation
    bool identity = true;
    for (std::size_t f = 0; f < c.frames; ++f)
      identity &= s.frame_perm[f] == f;
    if (s.label == 1.0) {
      CHECK(identity);
      ++positives;
    } else {
      CHECK_FALSE(identity);
      ++negatives;
    }
  }
  CHECK(positives > 5);
  CHECK(negatives > 5);

  TaskSample r = make_reversed(d.clips[0], rng);
  if (r.label == 0.0) {
    for (std::size_t f = 0; f < c.frames; ++f)
      CHECK(r.frame_perm[f] == c.frames - 1 - f);
  }
}

TEST_CASE("alignment samples place windows consistently") {
  DatasetConfig c = tiny_config();
  Dataset d = Dataset::generate(c);
  Rng rng(8);
  const std::size_t window = 3, offset = 2;
  for (int i = 0; i < 60; ++i) {
    TaskSample s = make_misaligned(d.clips[0], d.clips[1], window, offset, rng);
    CHECK(s.window == window);
    CHECK(s.start_a + window <= c.frames);
    CHECK(s.start_b + window <= c.frames);
    if (s.label == 1.0) {
      CHECK(s.start_a == s.start_b);
      CHECK_FALSE(s.b_from_other);
    } else if (!s.b_from_other) {
      const std::size_t gap = s.start_a > s.start_b ? s.start_a - s.start_b
                                                    : s.start_b - s.start_a;
      CHECK(gap >= offset);
    }
  }
}

TEST_CASE("copy_frames extracts contiguous flattened frames") {
  DatasetConfig c = tiny_config();
  Dataset d = Dataset::generate(c);
  const MultiModalClip& clip = d.clips[2];
  const std::size_t dim = c.frame_dim(Modality::Flow);
  std::vector<double> buf(2 * dim);
  copy_frames(clip, Modality::Flow, 1, 2, buf.data());
  for (std::size_t i = 0; i < 2 * dim; ++i)
    CHECK(buf[i] == clip.flow.data()[dim + i]);
  // Permuted copy: output frame f = input frame perm[f].
  std::vector<std::size_t> perm{3, 0, 1, 2, 4, 5};
  std::vector<double> buf2(c.frames * dim);
  copy_frames_permuted(clip, Modality::Flow, perm, buf2.data());
  for (std::size_t i = 0; i < dim; ++i) {
    CHECK(buf2[i] == clip.flow.data()[3 * dim + i]);
    CHECK(buf2[dim + i] == clip.flow.data()[i]);
  }
}

TEST_CASE("invalid configs are rejected") {
  DatasetConfig c = tiny_config();
  c.num_classes = 1;
  CHECK_THROWS_AS(c.validate(), ValueError);
  DatasetConfig c2 = tiny_config();
  c2.frames = 0;
  CHECK_THROWS_AS(c2.validate(), ValueError);
}
