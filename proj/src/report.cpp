#include "evoloss/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "evoloss/errors.hpp"
#include "evoloss/fsutil.hpp"
#include "evoloss/keys.hpp"

namespace evoloss {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> average_tie_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double pearson_correlation(const std::vector<double>& x,
                           const std::vector<double>& y) {
  if (x.size() != y.size())
    throw ValueError("correlation inputs have lengths " +
                     std::to_string(x.size()) + " and " +
                     std::to_string(y.size()));
  const std::size_t n = x.size();
  if (n < 2) throw ValueError("correlation needs at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw ValueError("correlation undefined: an input has zero variance");
  return sxy / std::sqrt(sxx * syy);
}

double spearman_correlation(const std::vector<double>& x,
                            const std::vector<double>& y) {
  if (x.size() != y.size())
    throw ValueError("correlation inputs have lengths " +
                     std::to_string(x.size()) + " and " +
                     std::to_string(y.size()));
  return pearson_correlation(average_tie_ranks(x), average_tie_ranks(y));
}

StrategyRunSummary summarize_run(const std::vector<HistoryEntry>& entries) {
  if (entries.empty()) throw ValueError("cannot summarize an empty history");
  StrategyRunSummary s;
  s.strategy = entries.front().strategy;
  s.seed = entries.front().seed;
  s.evals = entries.size();
  std::vector<double> ok;
  for (const HistoryEntry& e : entries) {
    if (e.failed) {
      ++s.failures;
    } else {
      ok.push_back(e.fitness);
    }
  }
  if (ok.empty()) {
    s.best = -std::numeric_limits<double>::infinity();
    return s;
  }
  s.best = *std::max_element(ok.begin(), ok.end());
  s.mean = std::accumulate(ok.begin(), ok.end(), 0.0) /
           static_cast<double>(ok.size());
  if (ok.size() >= 2) {
    double ss = 0.0;
    for (double v : ok) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(ok.size() - 1));
  }
  return s;
}

CorrelationReport correlation_from_history(
    const std::vector<HistoryEntry>& entries) {
  std::vector<double> elo, weak;
  for (const HistoryEntry& e : entries) {
    if (e.failed || !e.weak_fitness || e.per_trial_kl.empty()) continue;
    elo.push_back(e.fitness);
    weak.push_back(*e.weak_fitness);
  }
  if (elo.size() < 2)
    throw ValueError("correlation needs at least 2 evaluations that carry "
                     "both fitness kinds, found " +
                     std::to_string(elo.size()));
  CorrelationReport rep;
  rep.points = elo.size();
  rep.pearson = pearson_correlation(elo, weak);
  rep.spearman = spearman_correlation(elo, weak);
  return rep;
}

void write_trajectory_csv(const std::vector<HistoryEntry>& entries,
                          const std::string& path) {
  const std::vector<std::string>& keys = canonical_keys();
  std::ostringstream out;
  out << "round,key,value\n";
  for (const HistoryEntry& e : entries) {
    if (e.genome.size() != keys.size())
      throw ValueError("history entry at round " + std::to_string(e.round) +
                       " has genome size " + std::to_string(e.genome.size()));
    for (std::size_t i = 0; i < keys.size(); ++i)
      out << e.round << ',' << keys[i] << ',' << fmt(e.genome.data()[i])
          << '\n';
  }
  write_text_atomic(path, out.str());
}

void write_heatmap_csv(const DenseArray& genome, const std::string& path) {
  const std::vector<std::string>& keys = canonical_keys();
  if (genome.size() != keys.size())
    throw ValueError("heatmap genome has " + std::to_string(genome.size()) +
                     " values, expected " + std::to_string(keys.size()));
  std::ostringstream out;
  out << "modality,task,key,weight\n";
  for (std::size_t i = 0; i < keys.size(); ++i) {
    GenomeKey k = parse_key(keys[i]);
    std::string task(1, k.task);
    if (k.layer > 0) task += std::to_string(k.layer);
    out << modality_name(k.modality) << ',' << task << ',' << keys[i] << ','
        << fmt(genome.data()[i]) << '\n';
  }
  write_text_atomic(path, out.str());
}

void write_scatter_csv(const std::vector<HistoryEntry>& entries,
                       const std::string& path) {
  std::ostringstream out;
  out << "round,elo_fitness,weak_fitness\n";
  for (const HistoryEntry& e : entries) {
    if (e.failed || !e.weak_fitness || e.per_trial_kl.empty()) continue;
    out << e.round << ',' << fmt(e.fitness) << ',' << fmt(*e.weak_fitness)
        << '\n';
  }
  write_text_atomic(path, out.str());
}

void write_correlation_csv(const CorrelationReport& report,
                           const std::string& path) {
  std::ostringstream out;
  out << "pearson,spearman,points\n"
      << fmt(report.pearson) << ',' << fmt(report.spearman) << ','
      << report.points << '\n';
  write_text_atomic(path, out.str());
}

void write_strategy_summary_csv(const std::vector<StrategyRunSummary>& rows,
                                const std::string& path) {
  std::ostringstream out;
  out << "strategy,seed,evals,failures,best,mean,stddev\n";
  for (const StrategyRunSummary& s : rows)
    out << s.strategy << ',' << s.seed << ',' << s.evals << ',' << s.failures
        << ',' << fmt(s.best) << ',' << fmt(s.mean) << ',' << fmt(s.stddev)
        << '\n';
  write_text_atomic(path, out.str());
}

void write_evals_csv(const std::vector<EvalResult>& results,
                     const std::string& path) {
  std::ostringstream out;
  out << "protocol,accuracy,fit_count,score_count\n";
  for (const EvalResult& r : results)
    out << protocol_name(r.protocol) << ',' << fmt(r.accuracy) << ','
        << r.fit_count << ',' << r.score_count << '\n';
  write_text_atomic(path, out.str());
}

}  // namespace evoloss
