#include "evoloss/model.hpp"

#include <sstream>

#include "evoloss/errors.hpp"

namespace evoloss {

ModelConfig ModelConfig::full_scale() { return ModelConfig{}; }

ModelConfig ModelConfig::small_scale() {
  ModelConfig c;
  c.embed_dim = 16;
  c.hidden = {32, 16};
  c.decoder_hidden = 32;
  return c;
}

void ModelConfig::validate(const DatasetConfig& data) const {
  if (embed_dim == 0) throw ValueError("ModelConfig: embed_dim must be >= 1");
  if (hidden.size() < 2) {
    throw ValueError("ModelConfig: needs >= 2 hidden layers (distillation "
                     "taps at layers 1 and 2)");
  }
  for (std::size_t h : hidden) {
    if (h == 0) throw ValueError("ModelConfig: empty hidden layer");
  }
  if (decoder_hidden == 0) {
    throw ValueError("ModelConfig: decoder_hidden must be >= 1");
  }
  if (predict_context < 1 || predict_horizon < 1 ||
      predict_context + predict_horizon > data.frames) {
    throw ValueError("ModelConfig: prediction split " +
                     std::to_string(predict_context) + "+" +
                     std::to_string(predict_horizon) + " does not fit " +
                     std::to_string(data.frames) + " frames");
  }
  if (align_window < 1 || align_window > data.frames) {
    throw ValueError("ModelConfig: alignment window does not fit the clip");
  }
  if (align_offset < 1 ||
      align_window + align_offset > data.frames) {
    throw ValueError("ModelConfig: no misaligned window placement exists");
  }
  if (contrast_margin <= 0.0) {
    throw ValueError("ModelConfig: contrast_margin must be > 0");
  }
}

std::string ModelBundle::enc_name(Modality m, const char* kind,
                                  std::size_t layer) const {
  return std::string("enc.") + modality_name(m) + "." + kind +
         std::to_string(layer);
}

ModelBundle::ModelBundle(const DatasetConfig& data, const ModelConfig& model,
                         std::uint64_t seed)
    : data_(data), model_(model) {
  data_.validate();
  model_.validate(data_);
  Rng rng(seed);

  for (Modality m : {Modality::Main, Modality::Grey, Modality::Flow,
                     Modality::Audio}) {
    std::size_t in = data_.frame_dim(m);
    for (std::size_t l = 0; l < model_.hidden.size(); ++l) {
      const std::size_t out = model_.hidden[l];
      params_.add_glorot(enc_name(m, "W", l + 1), in, out, {in, out}, rng);
      params_.add(enc_name(m, "b", l + 1), DenseArray::zeros({out}));
      in = out;
    }
    const std::size_t last = model_.hidden.size() + 1;
    params_.add_glorot(enc_name(m, "W", last), in, model_.embed_dim,
                       {in, model_.embed_dim}, rng);
    params_.add(enc_name(m, "b", last), DenseArray::zeros({model_.embed_dim}));
  }

  for (const std::string& key : canonical_keys()) {
    if (key_has_decoder(key)) {
      const std::size_t out = decoder_out_dim(key);
      params_.add_glorot("dec." + key + ".W1", model_.embed_dim,
                         model_.decoder_hidden,
                         {model_.embed_dim, model_.decoder_hidden}, rng);
      params_.add("dec." + key + ".b1",
                  DenseArray::zeros({model_.decoder_hidden}));
      params_.add_glorot("dec." + key + ".W2", model_.decoder_hidden, out,
                         {model_.decoder_hidden, out}, rng);
      params_.add("dec." + key + ".b2", DenseArray::zeros({out}));
    } else if (key_has_head(key)) {
      const std::size_t in = head_in_dim(key);
      params_.add_glorot("head." + key + ".W", in, 1, {in}, rng);
      params_.add("head." + key + ".b", DenseArray::zeros({1}));
    }
  }
}

bool ModelBundle::key_has_decoder(const std::string& key) {
  const char t = parse_key(key).task;
  return t == 'R' || t == 'P' || t == 'C';
}

bool ModelBundle::key_has_head(const std::string& key) {
  const char t = parse_key(key).task;
  return t == 'S' || t == 'B' || t == 'A';
}

std::size_t ModelBundle::head_in_dim(const std::string& key) const {
  const GenomeKey k = parse_key(key);
  if (k.task == 'A') return 2 * model_.embed_dim;  // two concatenated streams
  if (k.task == 'S' || k.task == 'B') return model_.embed_dim;
  throw ValueError("key '" + key + "' has no binary head");
}

std::size_t ModelBundle::decoder_out_dim(const std::string& key) const {
  const GenomeKey k = parse_key(key);
  switch (k.task) {
    case 'R': return data_.frames * data_.frame_dim(k.modality);
    case 'P': return model_.predict_horizon * data_.frame_dim(k.modality);
    case 'C': return data_.frames * data_.frame_dim(cross_target(k.modality));
    default: throw ValueError("key '" + key + "' has no decoder");
  }
}

ModelBundle::Embed ModelBundle::embed_frames(Tape& tape, Modality m, Var frames,
                                             std::size_t frames_per_clip) const {
  const std::size_t dim = data_.frame_dim(m);
  const DenseArray& x = tape.value(frames);
  if (x.rank() != 2 || x.cols() != dim || x.rows() % frames_per_clip != 0) {
    throw ShapeError(std::string("embed_frames(") + modality_name(m) +
                     "): input " + x.shape_str() + " is not [clips*" +
                     std::to_string(frames_per_clip) + ", " +
                     std::to_string(dim) + "]");
  }
  Embed out;
  Var h = frames;
  for (std::size_t l = 0; l < model_.hidden.size(); ++l) {
    h = tape.relu(tape.affine(h, tape.leaf(enc_name(m, "W", l + 1)),
                              tape.leaf(enc_name(m, "b", l + 1))));
    out.taps.push_back(h);
  }
  const std::size_t last = model_.hidden.size() + 1;
  Var per_frame = tape.affine(h, tape.leaf(enc_name(m, "W", last)),
                              tape.leaf(enc_name(m, "b", last)));
  out.embedding = tape.segment_mean_rows(per_frame, frames_per_clip);
  return out;
}

DenseArray ModelBundle::embed_frames_plain(Modality m, const DenseArray& frames,
                                           std::size_t frames_per_clip) const {
  const std::size_t dim = data_.frame_dim(m);
  if (frames.rank() != 2 || frames.cols() != dim ||
      frames.rows() % frames_per_clip != 0) {
    throw ShapeError(std::string("embed_frames_plain(") + modality_name(m) +
                     "): input " + frames.shape_str() + " is not [clips*" +
                     std::to_string(frames_per_clip) + ", " +
                     std::to_string(dim) + "]");
  }
  DenseArray h = frames;
  for (std::size_t l = 0; l < model_.hidden.size(); ++l) {
    DenseArray z = matmul(h, params_.get(enc_name(m, "W", l + 1)));
    add_rowvec_inplace(z, params_.get(enc_name(m, "b", l + 1)));
    h = relu(z);
  }
  const std::size_t last = model_.hidden.size() + 1;
  DenseArray per_frame = matmul(h, params_.get(enc_name(m, "W", last)));
  add_rowvec_inplace(per_frame, params_.get(enc_name(m, "b", last)));
  return segment_mean_rows(per_frame, frames_per_clip);
}

Var ModelBundle::decode(Tape& tape, const std::string& key,
                        Var embedding) const {
  if (!key_has_decoder(key)) {
    throw ValueError("key '" + key + "' has no decoder");
  }
  Var h = tape.relu(tape.affine(embedding, tape.leaf("dec." + key + ".W1"),
                                tape.leaf("dec." + key + ".b1")));
  return tape.affine(h, tape.leaf("dec." + key + ".W2"),
                     tape.leaf("dec." + key + ".b2"));
}

Var ModelBundle::binary_prob(Tape& tape, const std::string& key,
                             Var features) const {
  if (!key_has_head(key)) throw ValueError("key '" + key + "' has no head");
  Var z = tape.matvec(features, tape.leaf("head." + key + ".W"));
  return tape.logistic(tape.add_scalar(z, tape.leaf("head." + key + ".b")));
}

double ModelBundle::binary_predict(const std::string& key,
                                   const DenseArray& features) const {
  Tape tape(params_, /*track_gradients=*/false);
  Var row = tape.constant(features.rank() == 1
                              ? features.reshaped({1, features.size()})
                              : features);
  Var p = binary_prob(tape, key, row);
  return tape.value(p)[0];
}

void ModelBundle::save_params(const std::string& path) const {
  params_.save(path);
}

void ModelBundle::load_params(const std::string& path) {
  ParamSet loaded = ParamSet::load(path);
  std::string missing, unknown, mismatched;
  for (const auto& [name, value] : params_) {
    if (!loaded.contains(name)) {
      missing += missing.empty() ? name : ", " + name;
    } else if (loaded.get(name).shape() != value.shape()) {
      mismatched += (mismatched.empty() ? name : ", " + name) + " expected " +
                    value.shape_str() + " got " +
                    DenseArray::shape_str(loaded.get(name).shape());
    }
  }
  for (const auto& [name, value] : loaded) {
    if (!params_.contains(name)) {
      unknown += unknown.empty() ? name : ", " + name;
    }
  }
  if (!missing.empty() || !unknown.empty() || !mismatched.empty()) {
    std::string msg = "checkpoint '" + path + "' does not fit this model:";
    if (!missing.empty()) msg += " missing [" + missing + "]";
    if (!unknown.empty()) msg += " unknown [" + unknown + "]";
    if (!mismatched.empty()) msg += " shape mismatch [" + mismatched + "]";
    throw IoError(msg);
  }
  params_ = std::move(loaded);
}

}  // namespace evoloss
