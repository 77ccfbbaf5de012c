#include "evoloss/losses.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include "evoloss/errors.hpp"

namespace evoloss {

namespace {

double clamp_prob(double p) {
  return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

std::string format_weight(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_weight_range(const std::string& key, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValueError("weight " + key + " = " + format_weight(v) +
                     " outside [0,1]");
  }
}

}  // namespace

LossWeights::LossWeights() : values_(genome_dim(), 0.0) {}

LossWeights::LossWeights(const DenseArray& genome) {
  if (genome.rank() != 1 || genome.size() != genome_dim()) {
    throw ShapeError("genome must be a vector of length " +
                     std::to_string(genome_dim()) + ", got " +
                     genome.shape_str());
  }
  values_.assign(genome.data(), genome.data() + genome.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    check_weight_range(canonical_keys()[i], values_[i]);
  }
}

LossWeights LossWeights::constant(double value) {
  check_weight_range("constant", value);
  LossWeights w;
  std::fill(w.values_.begin(), w.values_.end(), value);
  return w;
}

double LossWeights::get(const std::string& key) const {
  return values_[key_index(key)];
}

void LossWeights::set(const std::string& key, double value) {
  check_weight_range(key, value);
  values_[key_index(key)] = value;
}

DenseArray LossWeights::genome() const {
  return DenseArray::vector(values_);
}

void LossWeights::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  const auto& keys = canonical_keys();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    os << keys[i] << " = " << format_weight(values_[i]) << '\n';
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

LossWeights LossWeights::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open weights file '" + path + "'");
  LossWeights w;
  std::vector<bool> seen(genome_dim(), false);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto err = [&](const std::string& what) {
      throw IoError("'" + path + "' line " + std::to_string(line_no) + ": " +
                    what);
    };
    const auto eq = line.find('=');
    if (eq == std::string::npos) err("expected `KEY = value`");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value_str = trim(line.substr(eq + 1));
    if (!is_known_key(key)) err("unknown key '" + key + "'");
    const std::size_t idx = key_index(key);
    if (seen[idx]) err("duplicate key '" + key + "'");
    char* end = nullptr;
    const double v = std::strtod(value_str.c_str(), &end);
    if (value_str.empty() || end != value_str.c_str() + value_str.size()) {
      err("malformed value '" + value_str + "'");
    }
    if (!(v >= 0.0 && v <= 1.0)) err("weight outside [0,1]");
    w.values_[idx] = v;
    seen[idx] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw IoError("'" + path + "': missing key '" + canonical_keys()[i] +
                    "'");
    }
  }
  return w;
}

double recon_loss(const DenseArray& predicted, const DenseArray& target) {
  if (!predicted.same_shape(target)) {
    throw_shape_mismatch("recon_loss", predicted, target);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(predicted.size());
}

double bce_loss(double p, double y) {
  const double pc = clamp_prob(p);
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

double contrastive_loss(const DenseArray& x1, const DenseArray& x2,
                        const DenseArray& xn, double alpha) {
  if (!x1.same_shape(x2)) throw_shape_mismatch("contrastive_loss", x1, x2);
  if (!x1.same_shape(xn)) throw_shape_mismatch("contrastive_loss", x1, xn);
  if (alpha <= 0.0) throw ValueError("contrastive_loss: alpha must be > 0");
  double d12 = 0.0, d1n = 0.0;
  for (std::size_t i = 0; i < x1.size(); ++i) {
    d12 += (x1[i] - x2[i]) * (x1[i] - x2[i]);
    d1n += (x1[i] - xn[i]) * (x1[i] - xn[i]);
  }
  return std::sqrt(d12) + std::max(0.0, alpha - std::sqrt(d1n));
}

double distill_loss(const DenseArray& aux_tap, const DenseArray& main_tap) {
  if (!aux_tap.same_shape(main_tap)) {
    throw_shape_mismatch("distill_loss", aux_tap, main_tap);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < aux_tap.size(); ++i) {
    const double d = main_tap[i] - aux_tap[i];
    s += d * d;
  }
  return s / static_cast<double>(aux_tap.size());
}

Batch make_batch(const Dataset& data,
                 const std::vector<std::size_t>& clip_indices,
                 const ModelConfig& model, Rng& rng) {
  if (clip_indices.size() < 2) {
    throw ValueError("make_batch: needs >= 2 clips (negatives come from the "
                     "next batch member)");
  }
  Batch batch;
  batch.items.resize(clip_indices.size());
  for (std::size_t i = 0; i < clip_indices.size(); ++i) {
    BatchItem& item = batch.items[i];
    item.clip = clip_indices[i];
    item.partner = clip_indices[(i + 1) % clip_indices.size()];
    if (item.clip >= data.clips.size() || item.partner >= data.clips.size()) {
      throw ValueError("make_batch: clip index outside dataset");
    }
    const MultiModalClip& clip = data.clips[item.clip];
    item.shuffle = make_shuffled(clip, rng);
    item.reverse = make_reversed(clip, rng);
    item.align = make_misaligned(clip, data.clips[item.partner],
                                 model.align_window, model.align_offset, rng);
  }
  return batch;
}

namespace {

// Stacks per-clip frame rows for one modality into a tape constant.
struct BatchStacker {
  Tape& tape;
  const Dataset& data;
  const Batch& batch;

  const MultiModalClip& clip(std::size_t i) const {
    return data.clips[batch.items[i].clip];
  }

  Var full(Modality m) const {
    const std::size_t B = batch.size(), F = data.config.frames;
    const std::size_t dim = data.config.frame_dim(m);
    DenseArray x({B * F, dim});
    for (std::size_t i = 0; i < B; ++i) {
      copy_frames(clip(i), m, 0, F, x.data() + i * F * dim);
    }
    return tape.constant(std::move(x));
  }

  Var permuted(Modality m, bool use_shuffle) const {
    const std::size_t B = batch.size(), F = data.config.frames;
    const std::size_t dim = data.config.frame_dim(m);
    DenseArray x({B * F, dim});
    for (std::size_t i = 0; i < B; ++i) {
      const TaskSample& s =
          use_shuffle ? batch.items[i].shuffle : batch.items[i].reverse;
      copy_frames_permuted(clip(i), m, s.frame_perm, x.data() + i * F * dim);
    }
    return tape.constant(std::move(x));
  }

  Var prefix(Modality m, std::size_t count) const {
    const std::size_t B = batch.size();
    const std::size_t dim = data.config.frame_dim(m);
    DenseArray x({B * count, dim});
    for (std::size_t i = 0; i < B; ++i) {
      copy_frames(clip(i), m, 0, count, x.data() + i * count * dim);
    }
    return tape.constant(std::move(x));
  }

  // One row per clip holding `count` flattened frames from `start`; the
  // decoder target layout.
  Var block(Modality m, std::size_t start, std::size_t count) const {
    const std::size_t B = batch.size();
    const std::size_t dim = data.config.frame_dim(m);
    DenseArray x({B, count * dim});
    for (std::size_t i = 0; i < B; ++i) {
      copy_frames(clip(i), m, start, count, x.data() + i * count * dim);
    }
    return tape.constant(std::move(x));
  }

  Var aux_window(Modality m) const {
    const std::size_t B = batch.size();
    const std::size_t dim = data.config.frame_dim(m);
    const std::size_t W = batch.items.front().align.window;
    DenseArray x({B * W, dim});
    for (std::size_t i = 0; i < B; ++i) {
      copy_frames(clip(i), m, batch.items[i].align.start_a, W,
                  x.data() + i * W * dim);
    }
    return tape.constant(std::move(x));
  }

  Var main_window() const {
    const std::size_t B = batch.size();
    const std::size_t dim = data.config.frame_dim(Modality::Main);
    const std::size_t W = batch.items.front().align.window;
    DenseArray x({B * W, dim});
    for (std::size_t i = 0; i < B; ++i) {
      const BatchItem& item = batch.items[i];
      const MultiModalClip& src =
          data.clips[item.align.b_from_other ? item.partner : item.clip];
      copy_frames(src, Modality::Main, item.align.start_b, W,
                  x.data() + i * W * dim);
    }
    return tape.constant(std::move(x));
  }
};

}  // namespace

Var total_loss(Tape& tape, const LossWeights& weights,
               const ModelBundle& bundle, const Dataset& data,
               const Batch& batch, LossBreakdown* breakdown) {
  if (batch.size() < 2) {
    throw ValueError("total_loss: batch must hold >= 2 clips");
  }
  const ModelConfig& mc = bundle.config();
  const std::size_t F = data.config.frames;
  BatchStacker stack{tape, data, batch};

  // Full-clip encoder passes are shared between every term that consumes the
  // same modality; they are built on first use only.
  std::array<std::optional<ModelBundle::Embed>, 4> full;
  auto full_embed = [&](Modality m) -> ModelBundle::Embed& {
    auto& slot = full[static_cast<std::size_t>(m)];
    if (!slot) slot = bundle.embed_frames(tape, m, stack.full(m), F);
    return *slot;
  };
  std::optional<Var> align_main;
  auto align_main_embed = [&]() -> Var {
    if (!align_main) {
      align_main = bundle
                       .embed_frames(tape, Modality::Main, stack.main_window(),
                                     mc.align_window)
                       .embedding;
    }
    return *align_main;
  };

  auto labels_of = [&](TaskKind kind) {
    std::vector<double> labels(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const BatchItem& item = batch.items[i];
      const TaskSample& s = kind == TaskKind::Shuffle ? item.shuffle
                            : kind == TaskKind::Reverse ? item.reverse
                                                        : item.align;
      labels[i] = s.label;
    }
    return labels;
  };

  std::vector<Var> terms;
  std::vector<double> term_weights;
  if (breakdown) {
    breakdown->parts.clear();
    for (const std::string& key : canonical_keys()) breakdown->parts[key] = 0.0;
  }

  for (const std::string& key : canonical_keys()) {
    const double w = weights.get(key);
    if (w == 0.0) continue;
    const GenomeKey k = parse_key(key);
    Var term;
    switch (k.task) {
      case 'R': {
        Var dec = bundle.decode(tape, key, full_embed(k.modality).embedding);
        term = tape.mse(dec, stack.block(k.modality, 0, F));
        break;
      }
      case 'P': {
        Var emb = bundle
                      .embed_frames(tape, k.modality,
                                    stack.prefix(k.modality, mc.predict_context),
                                    mc.predict_context)
                      .embedding;
        Var dec = bundle.decode(tape, key, emb);
        term = tape.mse(dec, stack.block(k.modality, mc.predict_context,
                                         mc.predict_horizon));
        break;
      }
      case 'C': {
        Var dec = bundle.decode(tape, key, full_embed(k.modality).embedding);
        term = tape.mse(dec, stack.block(cross_target(k.modality), 0, F));
        break;
      }
      case 'S':
      case 'B': {
        const bool shuffle = k.task == 'S';
        Var emb = bundle
                      .embed_frames(tape, k.modality,
                                    stack.permuted(k.modality, shuffle), F)
                      .embedding;
        Var probs = bundle.binary_prob(tape, key, emb);
        term = tape.bce_mean(
            probs, labels_of(shuffle ? TaskKind::Shuffle : TaskKind::Reverse));
        break;
      }
      case 'A': {
        Var aux = bundle
                      .embed_frames(tape, k.modality,
                                    stack.aux_window(k.modality),
                                    mc.align_window)
                      .embedding;
        Var feats = tape.concat_cols(aux, align_main_embed());
        Var probs = bundle.binary_prob(tape, key, feats);
        term = tape.bce_mean(probs, labels_of(TaskKind::Align));
        break;
      }
      case 'E': {
        Var x1 = full_embed(Modality::Main).embedding;
        Var x2 = full_embed(k.modality).embedding;
        Var xn = tape.roll_rows(x2, 1);
        Var pull = tape.rows_l2_dist(x1, x2);
        Var push = tape.relu(
            tape.axpb(tape.rows_l2_dist(x1, xn), -1.0, mc.contrast_margin));
        term = tape.mean(tape.add(pull, push));
        break;
      }
      case 'D': {
        Var main_tap = full_embed(Modality::Main).taps.at(k.layer - 1);
        Var aux_tap = full_embed(k.modality).taps.at(k.layer - 1);
        term = tape.mse(main_tap, tape.stop_gradient(aux_tap));
        break;
      }
      default:
        throw ValueError("key '" + key + "' has no loss rule");
    }
    terms.push_back(term);
    term_weights.push_back(w);
    if (breakdown) breakdown->parts[key] = tape.value(term)[0];
  }

  Var total = tape.weighted_sum(terms, term_weights);
  if (breakdown) breakdown->total = tape.value(total)[0];
  return total;
}

double alignment_loss(const ModelBundle& bundle, const MultiModalClip& clip_a,
                      const MultiModalClip& clip_b, const TaskSample& sample,
                      const std::string& key) {
  if (sample.kind != TaskKind::Align) {
    throw ValueError("alignment_loss: sample is not an alignment sample");
  }
  const GenomeKey k = parse_key(key);
  if (k.task != 'A') throw ValueError("alignment_loss: key '" + key +
                                      "' is not an alignment key");
  const DatasetConfig& dc = bundle.data_config();
  const std::size_t W = sample.window;

  Tape tape(bundle.params(), /*track_gradients=*/false);
  DenseArray aux({W, dc.frame_dim(k.modality)});
  copy_frames(clip_a, k.modality, sample.start_a, W, aux.data());
  DenseArray main({W, dc.frame_dim(Modality::Main)});
  copy_frames(sample.b_from_other ? clip_b : clip_a, Modality::Main,
              sample.start_b, W, main.data());

  Var aux_emb =
      bundle.embed_frames(tape, k.modality, tape.constant(std::move(aux)), W)
          .embedding;
  Var main_emb =
      bundle
          .embed_frames(tape, Modality::Main, tape.constant(std::move(main)), W)
          .embedding;
  Var feats = tape.concat_cols(aux_emb, main_emb);
  Var prob = bundle.binary_prob(tape, key, feats);
  return bce_loss(tape.value(prob)[0], sample.label);
}

}  // namespace evoloss
