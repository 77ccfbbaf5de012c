#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "evoloss/dense_array.hpp"
#include "evoloss/evolve.hpp"

namespace evoloss {

// One evaluation in an evolution run. Serialized as one JSON object per line
// with alphabetically sorted keys, so identical runs produce byte-identical
// files. Failed evaluations carry `"fitness": null` plus the error text.
struct HistoryEntry {
  std::size_t round = 0;
  std::string strategy;
  std::uint64_t seed = 0;
  DenseArray genome;  // canonical key order
  double fitness = -std::numeric_limits<double>::infinity();
  bool failed = false;
  bool cache_hit = false;
  std::vector<double> per_trial_kl;
  std::optional<double> weak_fitness;
  std::string error;  // only meaningful when failed
};

HistoryEntry make_history_entry(const EvolutionRecord& record,
                                const std::string& strategy,
                                std::uint64_t seed);

std::string history_line(const HistoryEntry& entry);
HistoryEntry parse_history_line(const std::string& line, std::size_t line_no);

class HistoryWriter {
 public:
  explicit HistoryWriter(const std::string& path);
  void append(const HistoryEntry& entry);

 private:
  std::ofstream out_;
  std::string path_;
};

// Parse errors name the offending line number.
std::vector<HistoryEntry> read_history(const std::string& path);
void write_history(const std::vector<HistoryEntry>& entries,
                   const std::string& path);

}  // namespace evoloss
