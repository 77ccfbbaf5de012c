#pragma once

#include <limits>
#include <string>
#include <vector>

#include "evoloss/history.hpp"
#include "evoloss/probes.hpp"

namespace evoloss {

double pearson_correlation(const std::vector<double>& x,
                           const std::vector<double>& y);
// Pearson on average-tie ranks.
double spearman_correlation(const std::vector<double>& x,
                            const std::vector<double>& y);

struct StrategyRunSummary {
  std::string strategy;
  std::uint64_t seed = 0;
  double best = 0.0;
  double mean = 0.0;    // over successful evaluations
  double stddev = 0.0;  // sample stddev; 0 when fewer than 2 points
  std::size_t evals = 0;
  std::size_t failures = 0;
};

StrategyRunSummary summarize_run(const std::vector<HistoryEntry>& entries);

struct CorrelationReport {
  double pearson = std::numeric_limits<double>::quiet_NaN();
  double spearman = std::numeric_limits<double>::quiet_NaN();
  std::size_t points = 0;
};

// Over entries carrying both fitness kinds; needs at least 2 such points.
CorrelationReport correlation_from_history(
    const std::vector<HistoryEntry>& entries);

// CSV layouts are fixed; every file ends with a newline and uses 17
// significant digits so values round-trip.
//
// trajectory.csv: round,key,value - one row per history entry per genome key.
void write_trajectory_csv(const std::vector<HistoryEntry>& entries,
                          const std::string& path);
// heatmap.csv: modality,task,key,weight - one row per genome key.
void write_heatmap_csv(const DenseArray& genome, const std::string& path);
// scatter.csv: round,elo_fitness,weak_fitness.
void write_scatter_csv(const std::vector<HistoryEntry>& entries,
                       const std::string& path);
// correlation.csv: pearson,spearman,points.
void write_correlation_csv(const CorrelationReport& report,
                           const std::string& path);
// strategy_summary.csv: strategy,seed,evals,failures,best,mean,stddev.
void write_strategy_summary_csv(const std::vector<StrategyRunSummary>& rows,
                                const std::string& path);
// evals.csv: protocol,accuracy,fit_count,score_count.
void write_evals_csv(const std::vector<EvalResult>& results,
                     const std::string& path);

}  // namespace evoloss
