#include "evoloss/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "evoloss/errors.hpp"
#include "json.hpp"

namespace evoloss {
namespace {

using nlohmann::json;

// Wraps one JSON object for strict reading: absent keys keep their defaults,
// unknown keys are an error.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object())
      throw ConfigError(where_ + " must be a JSON object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("bad value for " + where_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw ConfigError("unknown key '" + item.key() + "' in " + where_);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json dataset_to_json(const DatasetConfig& d) {
  return json{{"num_clips", d.num_clips}, {"num_classes", d.num_classes},
              {"zipf_s", d.zipf_s},       {"frames", d.frames},
              {"height", d.height},       {"width", d.width},
              {"audio_rate", d.audio_rate}, {"noise_std", d.noise_std},
              {"seed", d.seed}};
}

void dataset_from_json(const json& j, DatasetConfig& d) {
  Section s(j, "dataset");
  s.read("num_clips", d.num_clips);
  s.read("num_classes", d.num_classes);
  s.read("zipf_s", d.zipf_s);
  s.read("frames", d.frames);
  s.read("height", d.height);
  s.read("width", d.width);
  s.read("audio_rate", d.audio_rate);
  s.read("noise_std", d.noise_std);
  s.read("seed", d.seed);
  s.finish();
}

json fitness_to_json(const FitnessSettings& f) {
  return json{{"kind", f.kind}, {"k", f.k}, {"s", f.s}, {"trials", f.trials}};
}

void fitness_from_json(const json& j, FitnessSettings& f) {
  Section s(j, "fitness");
  s.read("kind", f.kind);
  s.read("k", f.k);
  s.read("s", f.s);
  s.read("trials", f.trials);
  s.finish();
}

json train_to_json(const TrainConfig& t) {
  return json{{"steps", t.steps},
              {"batch_size", t.batch_size},
              {"base_lr", t.base_lr},
              {"warmup_steps", t.warmup_steps},
              {"dataset_fraction", t.dataset_fraction},
              {"scale", scale_name(t.scale)}};
}

void train_from_json(const json& j, const std::string& where, TrainConfig& t) {
  Section s(j, where);
  s.read("steps", t.steps);
  s.read("batch_size", t.batch_size);
  s.read("base_lr", t.base_lr);
  s.read("warmup_steps", t.warmup_steps);
  s.read("dataset_fraction", t.dataset_fraction);
  std::string scale = scale_name(t.scale);
  s.read("scale", scale);
  try {
    t.scale = scale_from_name(scale);
  } catch (const ValueError& e) {
    throw ConfigError(where + ".scale: " + e.what());
  }
  s.finish();
}

json probe_to_json(const ProbeConfig& p) {
  return json{{"steps", p.steps},
              {"lr", p.lr},
              {"finetune_steps", p.finetune_steps},
              {"finetune_batch", p.finetune_batch},
              {"finetune_lr", p.finetune_lr}};
}

void probe_from_json(const json& j, ProbeConfig& p) {
  Section s(j, "probe");
  s.read("steps", p.steps);
  s.read("lr", p.lr);
  s.read("finetune_steps", p.finetune_steps);
  s.read("finetune_batch", p.finetune_batch);
  s.read("finetune_lr", p.finetune_lr);
  s.finish();
}

json evolve_to_json(const ExperimentConfig& c) {
  return json{{"strategy", c.strategy},
              {"budget", c.budget},
              {"tournament_capacity", c.tournament_capacity},
              {"tournament_size", c.tournament_size},
              {"grid_levels", c.grid_levels},
              {"cma_lambda", c.cma_lambda},
              {"cma_sigma0", c.cma_sigma0}};
}

void evolve_from_json(const json& j, ExperimentConfig& c) {
  Section s(j, "evolve");
  s.read("strategy", c.strategy);
  s.read("budget", c.budget);
  s.read("tournament_capacity", c.tournament_capacity);
  s.read("tournament_size", c.tournament_size);
  s.read("grid_levels", c.grid_levels);
  s.read("cma_lambda", c.cma_lambda);
  s.read("cma_sigma0", c.cma_sigma0);
  s.finish();
}

}  // namespace

std::string ExperimentConfig::resolved_dataset_path() const {
  return dataset_path.empty() ? out_dir + "/dataset.bin" : dataset_path;
}

std::string ExperimentConfig::labels_path() const {
  return resolved_dataset_path() + ".labels.tsv";
}

EvolveOptions ExperimentConfig::evolve_options(std::size_t dim) const {
  EvolveOptions opt;
  opt.strategy = strategy_from_name(strategy);
  opt.dim = dim;
  opt.budget = budget;
  opt.seed = seed;
  opt.tournament_capacity = tournament_capacity;
  opt.tournament_size = tournament_size;
  opt.grid_levels = grid_levels;
  opt.cma_lambda = cma_lambda;
  opt.cma_sigma0 = cma_sigma0;
  return opt;
}

void ExperimentConfig::validate() const {
  if (version != 1)
    throw ConfigError("unsupported config version " + std::to_string(version));
  dataset.validate();
  strategy_from_name(strategy);
  if (fitness.kind != "elo" && fitness.kind != "weak" && fitness.kind != "both")
    throw ConfigError("fitness.kind must be elo, weak or both, got '" +
                      fitness.kind + "'");
  if (!(fitness.s > 0.0))
    throw ConfigError("fitness.s must be positive");
  if (fitness.trials == 0) throw ConfigError("fitness.trials must be positive");
  if (budget == 0) throw ConfigError("evolve.budget must be positive");
  if (tournament_capacity == 0 || tournament_size == 0)
    throw ConfigError("tournament capacity and size must be positive");
  if (grid_levels == 0) throw ConfigError("evolve.grid_levels must be positive");
  if (!(cma_sigma0 > 0.0)) throw ConfigError("evolve.cma_sigma0 must be positive");
  if (eval_clips == 0 || eval_clips >= dataset.num_clips)
    throw ConfigError("eval_clips must be in (0, num_clips); got " +
                      std::to_string(eval_clips) + " of " +
                      std::to_string(dataset.num_clips));
  for (const TrainConfig* t : {&proxy, &train}) {
    if (t->steps == 0) throw ConfigError("train steps must be positive");
    if (t->batch_size < 2) throw ConfigError("batch_size must be at least 2");
    if (!(t->dataset_fraction > 0.0) || t->dataset_fraction > 1.0)
      throw ConfigError("dataset_fraction must be in (0, 1]");
  }
  if (probe.steps == 0) throw ConfigError("probe.steps must be positive");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

std::string config_to_json(const ExperimentConfig& c) {
  json j{{"version", c.version},
         {"dataset", dataset_to_json(c.dataset)},
         {"fitness", fitness_to_json(c.fitness)},
         {"evolve", evolve_to_json(c)},
         {"proxy", train_to_json(c.proxy)},
         {"train", train_to_json(c.train)},
         {"probe", probe_to_json(c.probe)},
         {"eval_clips", c.eval_clips},
         {"seed", c.seed},
         {"out_dir", c.out_dir},
         {"dataset_path", c.dataset_path}};
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section s(j, "config");
  s.read("version", c.version);
  if (const json* d = s.child("dataset")) dataset_from_json(*d, c.dataset);
  if (const json* f = s.child("fitness")) fitness_from_json(*f, c.fitness);
  if (const json* e = s.child("evolve")) evolve_from_json(*e, c);
  if (const json* p = s.child("proxy")) train_from_json(*p, "proxy", c.proxy);
  if (const json* t = s.child("train")) train_from_json(*t, "train", c.train);
  if (const json* p = s.child("probe")) probe_from_json(*p, c.probe);
  s.read("eval_clips", c.eval_clips);
  s.read("seed", c.seed);
  s.read("out_dir", c.out_dir);
  s.read("dataset_path", c.dataset_path);
  s.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void save_config(const ExperimentConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file " + path);
  out << config_to_json(config);
  if (!out) throw IoError("failed writing config file " + path);
}

}  // namespace evoloss
