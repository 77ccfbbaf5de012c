#include "evoloss/history.hpp"

#include <cmath>

#include "evoloss/errors.hpp"
#include "evoloss/keys.hpp"
#include "json.hpp"

namespace evoloss {

using nlohmann::json;

HistoryEntry make_history_entry(const EvolutionRecord& record,
                                const std::string& strategy,
                                std::uint64_t seed) {
  HistoryEntry e;
  e.round = record.round;
  e.strategy = strategy;
  e.seed = seed;
  e.genome = record.genome;
  e.fitness = record.outcome.fitness;
  e.failed = record.outcome.failed;
  e.cache_hit = record.cache_hit;
  e.per_trial_kl = record.outcome.per_trial_kl;
  e.weak_fitness = record.outcome.weak_fitness;
  e.error = record.outcome.error;
  return e;
}

std::string history_line(const HistoryEntry& entry) {
  if (entry.genome.size() != genome_dim())
    throw ValueError("history entry genome has " +
                     std::to_string(entry.genome.size()) + " values, expected " +
                     std::to_string(genome_dim()));
  json genome = json::object();
  const std::vector<std::string>& keys = canonical_keys();
  for (std::size_t i = 0; i < keys.size(); ++i)
    genome[keys[i]] = entry.genome.data()[i];
  json j{{"round", entry.round},
         {"strategy", entry.strategy},
         {"seed", entry.seed},
         {"genome", std::move(genome)},
         {"cache_hit", entry.cache_hit},
         {"per_trial_kl", entry.per_trial_kl}};
  if (entry.failed) {
    j["fitness"] = nullptr;
    j["error"] = entry.error;
  } else {
    j["fitness"] = entry.fitness;
  }
  if (entry.weak_fitness) j["weak_fitness"] = *entry.weak_fitness;
  return j.dump();
}

HistoryEntry parse_history_line(const std::string& line, std::size_t line_no) {
  const std::string where = "history line " + std::to_string(line_no);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError(where + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw IoError(where + ": expected a JSON object");
  HistoryEntry e;
  try {
    e.round = j.at("round").get<std::size_t>();
    e.strategy = j.at("strategy").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.cache_hit = j.value("cache_hit", false);
    const json& fit = j.at("fitness");
    if (fit.is_null()) {
      e.failed = true;
      e.fitness = -std::numeric_limits<double>::infinity();
      e.error = j.value("error", std::string());
    } else {
      e.fitness = fit.get<double>();
    }
    e.per_trial_kl = j.value("per_trial_kl", std::vector<double>());
    if (j.contains("weak_fitness"))
      e.weak_fitness = j.at("weak_fitness").get<double>();
    const json& genome = j.at("genome");
    if (!genome.is_object())
      throw IoError(where + ": genome must be an object");
    e.genome = DenseArray::zeros({genome_dim()});
    std::size_t found = 0;
    for (const auto& item : genome.items()) {
      if (!is_known_key(item.key()))
        throw IoError(where + ": unknown genome key '" + item.key() + "'");
      e.genome.data()[key_index(item.key())] = item.value().get<double>();
      ++found;
    }
    if (found != genome_dim())
      throw IoError(where + ": genome has " + std::to_string(found) +
                    " keys, expected " + std::to_string(genome_dim()));
  } catch (const json::exception& ex) {
    throw IoError(where + ": " + ex.what());
  }
  return e;
}

HistoryWriter::HistoryWriter(const std::string& path)
    : out_(path, std::ios::trunc), path_(path) {
  if (!out_) throw IoError("cannot open history file " + path + " for writing");
}

void HistoryWriter::append(const HistoryEntry& entry) {
  out_ << history_line(entry) << '\n';
  out_.flush();
  if (!out_) throw IoError("failed writing history file " + path_);
}

std::vector<HistoryEntry> read_history(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open history file " + path);
  std::vector<HistoryEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    entries.push_back(parse_history_line(line, line_no));
  }
  return entries;
}

void write_history(const std::vector<HistoryEntry>& entries,
                   const std::string& path) {
  HistoryWriter writer(path);
  for (const HistoryEntry& e : entries) writer.append(e);
}

}  // namespace evoloss
