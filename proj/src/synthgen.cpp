#include "evoloss/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "evoloss/binio.hpp"
#include "evoloss/errors.hpp"

namespace evoloss {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBlobSigma = 2.0;    // pixels
constexpr double kMaxSpeed = 2.0;     // pixels/frame at the fastest class
constexpr double kCurvature = 0.35;   // radians/frame heading change unit
constexpr double kBaseCycles = 0.37;  // audio cycles/frame per class step

constexpr char kMagic[4] = {'E', 'V', 'D', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

// Signed displacement a on a circle of the given period, in [-period/2, period/2).
double wrap_delta(double a, double period) {
  double d = std::fmod(a, period);
  if (d < -period / 2.0) d += period;
  if (d >= period / 2.0) d -= period;
  return d;
}

double wrap_coord(double p, double period) {
  double w = std::fmod(p, period);
  if (w < 0.0) w += period;
  return w;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

const char* modality_name(Modality m) {
  return kModalityNames[static_cast<int>(m)];
}

char modality_letter(Modality m) {
  switch (m) {
    case Modality::Main: return 'R';
    case Modality::Grey: return 'G';
    case Modality::Flow: return 'F';
    case Modality::Audio: return 'A';
  }
  throw ValueError("unknown modality");
}

void DatasetConfig::validate() const {
  if (num_classes < 2) throw ValueError("DatasetConfig: num_classes must be >= 2");
  if (frames < 4) throw ValueError("DatasetConfig: frames must be >= 4");
  if (height == 0 || width == 0) throw ValueError("DatasetConfig: empty frame");
  if (audio_rate == 0) throw ValueError("DatasetConfig: audio_rate must be >= 1");
  if (zipf_s <= 0.0) throw ValueError("DatasetConfig: zipf_s must be > 0");
  if (noise_std < 0.0) throw ValueError("DatasetConfig: noise_std must be >= 0");
}

std::size_t DatasetConfig::frame_dim(Modality m) const {
  switch (m) {
    case Modality::Main: return height * width * 3;
    case Modality::Grey: return height * width;
    case Modality::Flow: return height * width * 2;
    case Modality::Audio: return audio_rate;
  }
  throw ValueError("unknown modality");
}

const DenseArray& MultiModalClip::modality(Modality m) const {
  switch (m) {
    case Modality::Main: return main;
    case Modality::Grey: return grey;
    case Modality::Flow: return flow;
    case Modality::Audio: return audio;
  }
  throw ValueError("unknown modality");
}

int zipf_sample(std::size_t num_classes, double s, Rng& rng) {
  if (num_classes == 0) throw ValueError("zipf_sample: num_classes must be >= 1");
  if (s <= 0.0) throw ValueError("zipf_sample: s must be > 0");
  double harmonic = 0.0;
  for (std::size_t i = 1; i <= num_classes; ++i) {
    harmonic += std::pow(static_cast<double>(i), -s);
  }
  const double u = rng.uniform() * harmonic;
  double acc = 0.0;
  for (std::size_t i = 1; i <= num_classes; ++i) {
    acc += std::pow(static_cast<double>(i), -s);
    if (u < acc) return static_cast<int>(i - 1);
  }
  return static_cast<int>(num_classes - 1);
}

MultiModalClip generate_clip(int latent_class, const DatasetConfig& config,
                             Rng& rng) {
  config.validate();
  if (latent_class < 0 ||
      static_cast<std::size_t>(latent_class) >= config.num_classes) {
    throw ValueError("generate_clip: class " + std::to_string(latent_class) +
                     " outside [0, " + std::to_string(config.num_classes) + ")");
  }
  const std::size_t F = config.frames, H = config.height, W = config.width;
  const std::size_t R = config.audio_rate;
  const double c = static_cast<double>(latent_class);
  const double class_frac =
      c / static_cast<double>(config.num_classes - 1);  // 0 for class 0

  // Class-determined appearance and kinematics. Hue repeats every 4 classes
  // so color alone never separates all classes; motion and audio carry the
  // remaining bits.
  const double hue = static_cast<double>(latent_class % 4) / 4.0;
  double color[3];
  for (int ch = 0; ch < 3; ++ch) {
    color[ch] =
        0.5 + 0.5 * std::cos(2.0 * kPi * (hue - static_cast<double>(ch) / 3.0));
  }
  const double speed = kMaxSpeed * class_frac;
  const double curvature =
      (static_cast<double>(latent_class % 3) - 1.0) * kCurvature;
  const double heading0 =
      2.0 * kPi * c / static_cast<double>(config.num_classes);

  double px = rng.uniform(0.0, static_cast<double>(W));
  double py = rng.uniform(0.0, static_cast<double>(H));
  const double phase = rng.uniform(0.0, 2.0 * kPi);

  MultiModalClip clip;
  clip.latent_class = latent_class;
  clip.main = DenseArray({F, H, W, 3});
  clip.flow = DenseArray({F, H, W, 2});

  const double inv_two_sigma_sq = 1.0 / (2.0 * kBlobSigma * kBlobSigma);
  for (std::size_t f = 0; f < F; ++f) {
    const double heading = heading0 + curvature * static_cast<double>(f);
    const double vx = speed * std::cos(heading);
    const double vy = speed * std::sin(heading);
    for (std::size_t y = 0; y < H; ++y) {
      const double dy = wrap_delta(static_cast<double>(y) - py,
                                   static_cast<double>(H));
      for (std::size_t x = 0; x < W; ++x) {
        const double dx = wrap_delta(static_cast<double>(x) - px,
                                     static_cast<double>(W));
        const double w = std::exp(-(dx * dx + dy * dy) * inv_two_sigma_sq);
        const std::size_t pix = ((f * H + y) * W + x);
        double* mp = clip.main.data() + pix * 3;
        for (int ch = 0; ch < 3; ++ch) mp[ch] = w * color[ch];
        double* fp = clip.flow.data() + pix * 2;
        fp[0] = w * vx;
        fp[1] = w * vy;
      }
    }
    px = wrap_coord(px + vx, static_cast<double>(W));
    py = wrap_coord(py + vy, static_cast<double>(H));
  }

  if (config.noise_std > 0.0) {
    for (double& v : clip.main.values()) {
      v = clamp01(v + config.noise_std * rng.normal());
    }
  }

  clip.audio = DenseArray({F * R});
  const double amp = class_frac;  // = instantaneous blob speed / kMaxSpeed
  const double freq = kBaseCycles * (c + 1.0);
  for (std::size_t sidx = 0; sidx < F * R; ++sidx) {
    const double t = static_cast<double>(sidx) / static_cast<double>(R);
    clip.audio[sidx] = amp * std::sin(2.0 * kPi * freq * t + phase);
  }
  if (config.noise_std > 0.0) {
    for (double& v : clip.audio.values()) {
      v = std::min(1.0, std::max(-1.0, v + config.noise_std * rng.normal()));
    }
  }

  clip.grey = derive_grey(clip.main);
  return clip;
}

DenseArray derive_grey(const DenseArray& main) {
  if (main.rank() < 1 || main.shape().back() != 3) {
    throw ShapeError("derive_grey: last dimension must be 3, got " +
                     main.shape_str());
  }
  std::vector<std::size_t> shape = main.shape();
  shape.back() = 1;
  DenseArray grey(shape);
  const std::size_t pixels = grey.size();
  for (std::size_t i = 0; i < pixels; ++i) {
    const double* p = main.data() + i * 3;
    grey[i] = (p[0] + p[1] + p[2]) / 3.0;
  }
  return grey;
}

namespace {

std::size_t clip_frames(const MultiModalClip& clip) {
  return clip.main.shape().front();
}

std::vector<std::size_t> identity_perm(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  return p;
}

}  // namespace

TaskSample make_shuffled(const MultiModalClip& clip, Rng& rng) {
  const std::size_t F = clip_frames(clip);
  if (F < 3) throw ValueError("make_shuffled: needs >= 3 frames");
  TaskSample s;
  s.kind = TaskKind::Shuffle;
  s.frame_perm = identity_perm(F);
  if (rng.uniform() < 0.5) {
    s.label = 1.0;
    return s;
  }
  s.label = 0.0;
  do {
    rng.shuffle(s.frame_perm);
  } while (s.frame_perm == identity_perm(F));
  return s;
}

TaskSample make_reversed(const MultiModalClip& clip, Rng& rng) {
  const std::size_t F = clip_frames(clip);
  if (F < 3) throw ValueError("make_reversed: needs >= 3 frames");
  TaskSample s;
  s.kind = TaskKind::Reverse;
  s.frame_perm = identity_perm(F);
  if (rng.uniform() < 0.5) {
    s.label = 1.0;
    return s;
  }
  s.label = 0.0;
  std::reverse(s.frame_perm.begin(), s.frame_perm.end());
  return s;
}

TaskSample make_misaligned(const MultiModalClip& clip_a,
                           const MultiModalClip& clip_b,
                           std::size_t window_frames,
                           std::size_t offset_frames, Rng& rng) {
  const std::size_t F = clip_frames(clip_a);
  if (offset_frames < 1) {
    throw ValueError("make_misaligned: offset_frames must be >= 1");
  }
  if (window_frames < 1 || window_frames > F) {
    throw ValueError("make_misaligned: window of " +
                     std::to_string(window_frames) + " frames does not fit in " +
                     std::to_string(F));
  }
  if (clip_frames(clip_b) != F) {
    throw ValueError("make_misaligned: clips have different frame counts");
  }
  const std::size_t max_start = F - window_frames;

  TaskSample s;
  s.kind = TaskKind::Align;
  s.window = window_frames;
  if (rng.uniform() < 0.5) {
    s.label = 1.0;
    s.start_a = rng.uniform_index(max_start + 1);
    s.start_b = s.start_a;
    return s;
  }
  s.label = 0.0;
  if (rng.uniform() < 0.5) {
    // Shifted window within the same clip.
    if (max_start < offset_frames) {
      throw ValueError("make_misaligned: no window start " +
                       std::to_string(offset_frames) +
                       "+ frames away fits in " + std::to_string(F) + " frames");
    }
    s.start_a = rng.uniform_index(max_start + 1);
    std::vector<std::size_t> valid;
    for (std::size_t t = 0; t <= max_start; ++t) {
      const std::size_t gap = t > s.start_a ? t - s.start_a : s.start_a - t;
      if (gap >= offset_frames) valid.push_back(t);
    }
    s.start_b = valid[rng.uniform_index(valid.size())];
  } else {
    s.b_from_other = true;
    s.start_a = rng.uniform_index(max_start + 1);
    s.start_b = rng.uniform_index(max_start + 1);
  }
  return s;
}

void copy_frames(const MultiModalClip& clip, Modality m, std::size_t start,
                 std::size_t count, double* dst) {
  const DenseArray& arr = clip.modality(m);
  const std::size_t F = clip_frames(clip);
  const std::size_t dim = arr.size() / F;
  if (start + count > F) {
    throw ValueError("copy_frames: frames [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside clip of " +
                     std::to_string(F));
  }
  std::memcpy(dst, arr.data() + start * dim, count * dim * sizeof(double));
}

void copy_frames_permuted(const MultiModalClip& clip, Modality m,
                          const std::vector<std::size_t>& perm, double* dst) {
  const DenseArray& arr = clip.modality(m);
  const std::size_t F = clip_frames(clip);
  if (perm.size() != F) {
    throw ValueError("copy_frames_permuted: permutation length " +
                     std::to_string(perm.size()) + " vs " + std::to_string(F) +
                     " frames");
  }
  const std::size_t dim = arr.size() / F;
  for (std::size_t f = 0; f < F; ++f) {
    std::memcpy(dst + f * dim, arr.data() + perm[f] * dim,
                dim * sizeof(double));
  }
}

Dataset Dataset::generate(const DatasetConfig& config) {
  config.validate();
  Dataset ds;
  ds.config = config;
  ds.labels_loaded = true;
  ds.clips.resize(config.num_clips);

  Rng class_rng(~config.seed);
  std::vector<int> classes(config.num_clips);
  for (std::size_t i = 0; i < config.num_clips; ++i) {
    classes[i] = zipf_sample(config.num_classes, config.zipf_s, class_rng);
  }
  for (std::size_t i = 0; i < config.num_clips; ++i) {
    Rng clip_rng(config.seed ^ static_cast<std::uint64_t>(i));
    ds.clips[i] = generate_clip(classes[i], config, clip_rng);
    ds.clips[i].clip_id = static_cast<int>(i);
  }
  return ds;
}

namespace {

void write_payload(std::ostream& os, const char* name, const DenseArray& arr) {
  const std::size_t len = std::strlen(name);
  binio::write_u32(os, static_cast<std::uint32_t>(len));
  os.write(name, static_cast<std::streamsize>(len));
  binio::write_u64(os, arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    binio::write_f32(os, static_cast<float>(arr[i]));
  }
}

DenseArray read_payload(std::istream& is, const std::string& path,
                        const char* expect_name,
                        std::vector<std::size_t> shape) {
  const std::uint32_t len = binio::read_u32(is);
  std::string name(len, '\0');
  is.read(name.data(), len);
  if (!is || name != expect_name) {
    throw IoError("'" + path + "': expected payload '" +
                  std::string(expect_name) + "', found '" + name + "'");
  }
  const std::uint64_t count = binio::read_u64(is);
  DenseArray arr(std::move(shape));
  if (count != arr.size()) {
    throw IoError("'" + path + "': payload '" + name + "' has " +
                  std::to_string(count) + " values, expected " +
                  std::to_string(arr.size()));
  }
  for (std::size_t i = 0; i < arr.size(); ++i) {
    arr[i] = static_cast<double>(binio::read_f32(is));
  }
  if (!is) throw IoError("'" + path + "': truncated clip payload");
  return arr;
}

}  // namespace

void Dataset::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  binio::write_u32(os, kFormatVersion);
  binio::write_u32(os, static_cast<std::uint32_t>(clips.size()));
  binio::write_u32(os, static_cast<std::uint32_t>(config.num_classes));
  binio::write_u32(os, static_cast<std::uint32_t>(config.frames));
  binio::write_u32(os, static_cast<std::uint32_t>(config.height));
  binio::write_u32(os, static_cast<std::uint32_t>(config.width));
  binio::write_u32(os, static_cast<std::uint32_t>(config.audio_rate));
  binio::write_f64(os, config.zipf_s);
  binio::write_f64(os, config.noise_std);
  binio::write_u64(os, config.seed);
  for (const MultiModalClip& clip : clips) {
    binio::write_u32(os, static_cast<std::uint32_t>(clip.clip_id));
    write_payload(os, "main", clip.main);
    write_payload(os, "flow", clip.flow);
    write_payload(os, "audio", clip.audio);
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

Dataset Dataset::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("'" + path + "' is not a dataset container");
  }
  const std::uint32_t version = binio::read_u32(is);
  if (version != kFormatVersion) {
    throw IoError("'" + path + "': unsupported format version " +
                  std::to_string(version));
  }
  Dataset ds;
  const std::uint32_t count = binio::read_u32(is);
  ds.config.num_clips = count;
  ds.config.num_classes = binio::read_u32(is);
  ds.config.frames = binio::read_u32(is);
  ds.config.height = binio::read_u32(is);
  ds.config.width = binio::read_u32(is);
  ds.config.audio_rate = binio::read_u32(is);
  ds.config.zipf_s = binio::read_f64(is);
  ds.config.noise_std = binio::read_f64(is);
  ds.config.seed = binio::read_u64(is);
  if (!is) throw IoError("'" + path + "': truncated header");
  ds.config.validate();

  const std::size_t F = ds.config.frames, H = ds.config.height,
                    W = ds.config.width, R = ds.config.audio_rate;
  ds.clips.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    MultiModalClip& clip = ds.clips[i];
    clip.clip_id = static_cast<int>(binio::read_u32(is));
    clip.main = read_payload(is, path, "main", {F, H, W, 3});
    clip.flow = read_payload(is, path, "flow", {F, H, W, 2});
    clip.audio = read_payload(is, path, "audio", {F * R});
    clip.grey = derive_grey(clip.main);
  }
  return ds;
}

void Dataset::save_labels(const std::string& path) const {
  if (!labels_loaded) {
    throw ValueError("save_labels: dataset has no labels to write");
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  for (const MultiModalClip& clip : clips) {
    os << clip.clip_id << '\t' << clip.latent_class << '\n';
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

void Dataset::load_labels(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open label sidecar '" + path + "'");
  std::vector<int> labels(clips.size(), -1);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    long long id = -1, cls = -1;
    if (!(ls >> id >> cls) || id < 0 ||
        static_cast<std::size_t>(id) >= clips.size() || cls < 0 ||
        static_cast<std::size_t>(cls) >= config.num_classes) {
      throw IoError("'" + path + "' line " + std::to_string(line_no) +
                    ": malformed label record");
    }
    if (labels[static_cast<std::size_t>(id)] != -1) {
      throw IoError("'" + path + "' line " + std::to_string(line_no) +
                    ": duplicate clip_id " + std::to_string(id));
    }
    labels[static_cast<std::size_t>(id)] = static_cast<int>(cls);
  }
  for (MultiModalClip& clip : clips) {
    const auto id = static_cast<std::size_t>(clip.clip_id);
    if (id >= labels.size() || labels[id] == -1) {
      throw IoError("'" + path + "': missing label for clip " +
                    std::to_string(clip.clip_id));
    }
    clip.latent_class = labels[id];
  }
  labels_loaded = true;
}

int Dataset::label_of(std::size_t clip_index) const {
  if (!labels_loaded) {
    throw ValueError("label_of: labels not loaded; this code path has no "
                     "label capability");
  }
  return clips.at(clip_index).latent_class;
}

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> counts(config.num_classes, 0);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    counts[static_cast<std::size_t>(label_of(i))] += 1;
  }
  return counts;
}

}  // namespace evoloss
