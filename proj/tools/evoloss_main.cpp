// Command-line harness: gen-data -> evolve -> train -> eval -> report.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "evoloss/config.hpp"
#include "evoloss/errors.hpp"
#include "evoloss/evolve.hpp"
#include "evoloss/fsutil.hpp"
#include "evoloss/history.hpp"
#include "evoloss/keys.hpp"
#include "evoloss/losses.hpp"
#include "evoloss/probes.hpp"
#include "evoloss/proxy.hpp"
#include "evoloss/report.hpp"

namespace {

using namespace evoloss;
namespace fs = std::filesystem;

constexpr std::uint64_t kTrainRngSalt = 0x74726169u;

struct CliArgs {
  std::string config_path;
  std::string strategy;
  std::string fitness;
  std::string out;
  std::string weights;
  std::string ckpt;
  std::string protocol = "all";
  std::vector<std::string> extra_histories;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* budget_opt = nullptr;
};

ExperimentConfig load_with_overrides(const CliArgs& a) {
  ExperimentConfig cfg = load_config(a.config_path);
  if (!a.strategy.empty()) cfg.strategy = a.strategy;
  if (!a.fitness.empty()) cfg.fitness.kind = a.fitness;
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.seed_opt && a.seed_opt->count() > 0) cfg.seed = a.seed;
  if (a.budget_opt && a.budget_opt->count() > 0) cfg.budget = a.budget;
  cfg.validate();
  return cfg;
}

// Runs `writer` against a temp path, then renames the result into place.
template <typename Fn>
void atomic_save(const std::string& path, Fn&& writer) {
  const std::string tmp = path + ".tmp";
  writer(tmp);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec)
    throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

void ensure_parent_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
}

Dataset load_dataset(const ExperimentConfig& cfg, bool with_labels) {
  Dataset data = Dataset::load(cfg.resolved_dataset_path());
  if (with_labels) data.load_labels(cfg.labels_path());
  return data;
}

int cmd_gen_data(const CliArgs& a) {
  ExperimentConfig cfg = load_with_overrides(a);
  if (a.seed_opt && a.seed_opt->count() > 0) cfg.dataset.seed = a.seed;
  const std::string path = cfg.resolved_dataset_path();
  ensure_parent_dir(path);
  Dataset data = Dataset::generate(cfg.dataset);
  atomic_save(path, [&](const std::string& tmp) { data.save(tmp); });
  atomic_save(cfg.labels_path(),
              [&](const std::string& tmp) { data.save_labels(tmp); });
  std::cout << "wrote " << data.clips.size() << " clips to " << path << "\n";
  std::vector<std::size_t> hist = data.class_histogram();
  for (std::size_t c = 0; c < hist.size(); ++c)
    std::cout << "class " << c << ": " << hist[c] << " clips\n";
  return 0;
}

int cmd_evolve(const CliArgs& a) {
  ExperimentConfig cfg = load_with_overrides(a);
  ensure_dir(cfg.out_dir);
  Dataset data = load_dataset(cfg, cfg.fitness.kind != "elo");

  FitnessFn inner =
      make_proxy_fitness(data, cfg.proxy, cfg.fitness, cfg.eval_clips);
  std::ofstream timing(cfg.out_dir + "/timing.ndjson", std::ios::trunc);
  if (!timing) throw IoError("cannot open timing file in " + cfg.out_dir);
  std::size_t eval_no = 0;
  FitnessFn timed = [&](const DenseArray& genome, std::uint64_t eval_seed) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      FitnessOutcome out = inner(genome, eval_seed);
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      timing << nlohmann::json{{"eval", eval_no++}, {"wall_ms", ms}} << "\n";
      return out;
    } catch (...) {
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      timing << nlohmann::json{{"eval", eval_no++}, {"wall_ms", ms}} << "\n";
      throw;
    }
  };

  EvolveOptions opt = cfg.evolve_options(genome_dim());
  EvolutionState state = evolve(opt, timed);

  HistoryWriter writer(cfg.out_dir + "/history.ndjson");
  std::size_t failures = 0, hits = 0;
  for (const EvolutionRecord& rec : state.history) {
    writer.append(make_history_entry(rec, cfg.strategy, cfg.seed));
    if (rec.outcome.failed) ++failures;
    if (rec.cache_hit) ++hits;
  }
  for (const EvolutionRecord& rec : state.history)
    if (rec.outcome.failed)
      std::cerr << "round " << rec.round
                << " failed: " << rec.outcome.error << "\n";
  if (state.cma_repairs > 0)
    std::cerr << "covariance repairs: " << state.cma_repairs << "\n";
  if (!state.has_best)
    throw ValueError("every evaluation failed; no best genome to save");
  LossWeights best(state.best.genome);
  atomic_save(cfg.out_dir + "/best.weights",
              [&](const std::string& tmp) { best.save(tmp); });
  std::cout << "strategy " << cfg.strategy << ": best fitness "
            << state.best.fitness << " at round " << state.best.round_born
            << " (" << state.history.size() << " evaluations, " << hits
            << " cache hits, " << failures << " failures)\n";
  std::cout << "wrote " << cfg.out_dir << "/history.ndjson and "
            << cfg.out_dir << "/best.weights\n";
  return 0;
}

int cmd_train(const CliArgs& a) {
  ExperimentConfig cfg = load_with_overrides(a);
  ensure_dir(cfg.out_dir);
  Dataset data = load_dataset(cfg, false);
  const std::string weights_path =
      a.weights.empty() ? cfg.out_dir + "/best.weights" : a.weights;
  LossWeights weights = LossWeights::load(weights_path);
  ModelBundle bundle(data.config, model_config_for(cfg.train.scale), cfg.seed);
  std::vector<std::size_t> pool = train_split(data, cfg.eval_clips);
  TrainResult result = train_bundle(bundle, data, weights, pool, cfg.train,
                                    cfg.seed ^ kTrainRngSalt);
  if (!result.finite)
    throw ValueError("non-finite loss at training step " +
                     std::to_string(result.steps_run));
  atomic_save(cfg.out_dir + "/model.ckpt",
              [&](const std::string& tmp) { bundle.save_params(tmp); });
  std::cout << "trained " << result.steps_run << " steps, loss "
            << result.step_loss.front() << " -> " << result.step_loss.back()
            << "\n";
  std::cout << "wrote " << cfg.out_dir << "/model.ckpt\n";
  return 0;
}

int cmd_eval(const CliArgs& a) {
  ExperimentConfig cfg = load_with_overrides(a);
  ensure_dir(cfg.out_dir);
  Dataset data = load_dataset(cfg, true);
  const std::string ckpt_path =
      a.ckpt.empty() ? cfg.out_dir + "/model.ckpt" : a.ckpt;
  ModelBundle bundle(data.config, model_config_for(cfg.train.scale), cfg.seed);
  bundle.load_params(ckpt_path);

  std::vector<std::size_t> eval_idx = eval_split(data, cfg.eval_clips);
  DenseArray embeddings = embed_clips(bundle, data, eval_idx);
  std::vector<int> labels(eval_idx.size()), ids(eval_idx.size());
  for (std::size_t i = 0; i < eval_idx.size(); ++i) {
    labels[i] = data.label_of(eval_idx[i]);
    ids[i] = data.clips[eval_idx[i]].clip_id;
  }
  const std::size_t k =
      cfg.fitness.k != 0 ? cfg.fitness.k : data.config.num_classes;

  std::vector<std::string> wanted;
  if (a.protocol == "all")
    wanted = {"kmeans", "linear", "finetune"};
  else
    wanted = {a.protocol};
  for (const std::string& name : wanted) {
    EvalResult res;
    switch (protocol_from_name(name)) {
      case EvalProtocol::KMeansProbe:
        res = kmeans_probe_eval(embeddings, labels, ids, k,
                                cfg.fitness.trials, cfg.seed);
        break;
      case EvalProtocol::LinearProbe:
        res = linear_probe_eval(embeddings, labels, ids,
                                data.config.num_classes, cfg.probe);
        break;
      case EvalProtocol::FineTune:
        res = fine_tune_eval(bundle, data, eval_idx, data.config.num_classes,
                             cfg.probe, cfg.seed);
        break;
    }
    nlohmann::json j{{"protocol", name},
                     {"accuracy", res.accuracy},
                     {"fit_count", res.fit_count},
                     {"score_count", res.score_count}};
    write_text_atomic(cfg.out_dir + "/eval_" + name + ".json",
                      j.dump(2) + "\n");
    std::cout << name << " accuracy: " << res.accuracy << " ("
              << res.score_count << " held-out clips)\n";
  }
  return 0;
}

int cmd_report(const CliArgs& a) {
  ExperimentConfig cfg = load_with_overrides(a);
  const std::string report_dir = cfg.out_dir + "/report";
  ensure_dir(report_dir);
  std::vector<HistoryEntry> entries =
      read_history(cfg.out_dir + "/history.ndjson");
  if (entries.empty())
    throw ValueError("history " + cfg.out_dir +
                     "/history.ndjson has no records");

  write_trajectory_csv(entries, report_dir + "/trajectory.csv");

  const HistoryEntry* best = nullptr;
  for (const HistoryEntry& e : entries)
    if (!e.failed && (!best || e.fitness > best->fitness)) best = &e;
  if (!best) throw ValueError("history has no successful evaluation");
  write_heatmap_csv(best->genome, report_dir + "/heatmap.csv");

  std::vector<StrategyRunSummary> summaries{summarize_run(entries)};
  std::vector<HistoryEntry> pooled = entries;
  for (const std::string& extra : a.extra_histories) {
    std::vector<HistoryEntry> more = read_history(extra);
    if (more.empty()) throw ValueError("history " + extra + " has no records");
    summaries.push_back(summarize_run(more));
    pooled.insert(pooled.end(), more.begin(), more.end());
  }
  write_strategy_summary_csv(summaries, report_dir + "/strategy_summary.csv");

  std::size_t dual = 0;
  for (const HistoryEntry& e : pooled)
    if (!e.failed && e.weak_fitness && !e.per_trial_kl.empty()) ++dual;
  if (dual >= 2) {
    write_scatter_csv(pooled, report_dir + "/scatter.csv");
    CorrelationReport corr;
    corr.points = dual;
    try {
      corr = correlation_from_history(pooled);
    } catch (const ValueError& e) {
      std::cout << "correlation unavailable (" << e.what()
                << "); writing nan\n";
    }
    write_correlation_csv(corr, report_dir + "/correlation.csv");
  } else {
    std::cout << "no dual-fitness evaluations; skipping scatter.csv and "
                 "correlation.csv\n";
  }

  std::vector<EvalResult> evals;
  for (const char* name : {"kmeans", "linear", "finetune"}) {
    const std::string path = cfg.out_dir + "/eval_" + name + ".json";
    if (!fs::exists(path)) continue;
    nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    EvalResult r;
    r.protocol = protocol_from_name(j.at("protocol").get<std::string>());
    r.accuracy = j.at("accuracy").get<double>();
    r.fit_count = j.at("fit_count").get<std::size_t>();
    r.score_count = j.at("score_count").get<std::size_t>();
    evals.push_back(r);
  }
  if (!evals.empty()) write_evals_csv(evals, report_dir + "/evals.csv");

  std::cout << "wrote report to " << report_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolves weights of a multi-task self-supervised loss on "
               "synthetic multi-modal clips"};
  app.require_subcommand(1);
  CliArgs a;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", a.config_path, "Experiment config JSON")
        ->required();
    a.seed_opt = cmd->add_option("--seed", a.seed, "Override the run seed");
    cmd->add_option("--out", a.out, "Override the output directory");
  };

  CLI::App* gen = app.add_subcommand(
      "gen-data", "Generate the synthetic dataset and its label sidecar");
  add_common(gen);

  CLI::App* evo = app.add_subcommand(
      "evolve", "Search loss weights; writes history.ndjson and best.weights");
  add_common(evo);
  evo->add_option("--strategy", a.strategy,
                  "Override search strategy (cmaes|tournament|random|grid)");
  evo->add_option("--fitness", a.fitness,
                  "Override fitness kind (elo|weak|both)");
  a.budget_opt =
      evo->add_option("--budget", a.budget, "Override the evaluation budget");

  CLI::App* trn = app.add_subcommand(
      "train", "Train the final model with evolved weights; writes model.ckpt");
  add_common(trn);
  trn->add_option("--weights", a.weights,
                  "Loss weights file (default <out>/best.weights)");

  CLI::App* evl = app.add_subcommand(
      "eval", "Probe a checkpoint on the held-out split");
  add_common(evl);
  evl->add_option("--ckpt", a.ckpt,
                  "Checkpoint to evaluate (default <out>/model.ckpt)");
  evl->add_option("--protocol", a.protocol,
                  "kmeans, linear, finetune or all (default all)");

  CLI::App* rep = app.add_subcommand(
      "report", "Render CSV reports from history and eval results");
  add_common(rep);
  rep->add_option("--history", a.extra_histories,
                  "Additional history.ndjson files for the strategy summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(a);
    if (evo->parsed()) return cmd_evolve(a);
    if (trn->parsed()) return cmd_train(a);
    if (evl->parsed()) return cmd_eval(a);
    if (rep->parsed()) return cmd_report(a);
    std::cerr << "error: no subcommand selected\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
