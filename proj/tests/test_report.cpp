#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "evoloss/errors.hpp"
#include "evoloss/keys.hpp"
#include "evoloss/report.hpp"
#include "evoloss/rng.hpp"

using namespace evoloss;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::size_t comma_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == ',';
  return n;
}

HistoryEntry entry_with(std::size_t round, double fitness, bool failed = false,
                        std::optional<double> weak = std::nullopt,
                        std::vector<double> kl = {}) {
  HistoryEntry e;
  e.round = round;
  e.strategy = "random";
  e.seed = 4;
  e.genome = DenseArray::full({genome_dim()}, 0.5);
  e.fitness = failed ? -std::numeric_limits<double>::infinity() : fitness;
  e.failed = failed;
  e.weak_fitness = weak;
  e.per_trial_kl = std::move(kl);
  return e;
}

}  // namespace

TEST_CASE("pearson correlation matches the oracle") {
  Rng rng(3);
  std::vector<double> x(40), y(40);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = 0.7 * x[i] + 0.5 * rng.normal();
  }
  CHECK(pearson_correlation(x, y) ==
        doctest::Approx(oracle::pearson_naive(x, y)).epsilon(1e-9));

  std::vector<double> exact = {1, 2, 3, 4};
  std::vector<double> doubled = {2, 4, 6, 8};
  std::vector<double> negated = {4, 3, 2, 1};
  CHECK(pearson_correlation(exact, doubled) == doctest::Approx(1.0));
  CHECK(pearson_correlation(exact, negated) == doctest::Approx(-1.0));

  CHECK_THROWS_AS(pearson_correlation({1, 2}, {1, 2, 3}), ValueError);
  CHECK_THROWS_AS(pearson_correlation({1}, {1}), ValueError);
  CHECK_THROWS_AS(pearson_correlation({1, 1, 1}, {1, 2, 3}), ValueError);
}

TEST_CASE("spearman correlation uses average-tie ranks") {
  Rng rng(9);
  std::vector<double> x(30), y(30);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform(0.0, 1.0);
    y[i] = x[i] * x[i];  // monotone transform
  }
  CHECK(spearman_correlation(x, y) == doctest::Approx(1.0).epsilon(1e-12));

  // Ties: oracle ranks are averaged, so both implementations must agree.
  std::vector<double> tx = {1, 2, 2, 2, 3, 5, 5, 0};
  std::vector<double> ty = {0, 1, 4, 4, 2, 9, 8, 1};
  CHECK(spearman_correlation(tx, ty) ==
        doctest::Approx(oracle::spearman_naive(tx, ty)).epsilon(1e-9));

  std::vector<double> xr(25), yr(25);
  for (std::size_t i = 0; i < xr.size(); ++i) {
    xr[i] = rng.normal();
    yr[i] = rng.normal();
  }
  CHECK(spearman_correlation(xr, yr) ==
        doctest::Approx(oracle::spearman_naive(xr, yr)).epsilon(1e-9));
}

TEST_CASE("run summaries aggregate successful evaluations") {
  std::vector<HistoryEntry> entries = {
      entry_with(0, -2.0), entry_with(1, -1.0),
      entry_with(2, 0.0, /*failed=*/true), entry_with(3, -4.0)};
  StrategyRunSummary s = summarize_run(entries);
  CHECK(s.strategy == "random");
  CHECK(s.seed == 4);
  CHECK(s.evals == 4);
  CHECK(s.failures == 1);
  CHECK(s.best == -1.0);
  CHECK(s.mean == doctest::Approx((-2.0 - 1.0 - 4.0) / 3.0).epsilon(1e-15));
  // Sample stddev of {-2,-1,-4} around -7/3.
  const double m = -7.0 / 3.0;
  const double var =
      ((-2 - m) * (-2 - m) + (-1 - m) * (-1 - m) + (-4 - m) * (-4 - m)) / 2.0;
  CHECK(s.stddev == doctest::Approx(std::sqrt(var)).epsilon(1e-12));

  CHECK_THROWS_AS(summarize_run({}), ValueError);
  StrategyRunSummary lone = summarize_run({entry_with(0, -1.5)});
  CHECK(lone.stddev == 0.0);
}

TEST_CASE("correlation report filters to dual-fitness entries") {
  std::vector<HistoryEntry> entries;
  Rng rng(5);
  for (std::size_t r = 0; r < 12; ++r) {
    const double elo = -rng.uniform(0.0, 2.0);
    const double weak = 0.4 - 0.1 * elo + 0.02 * rng.normal();
    entries.push_back(entry_with(r, elo, false, weak, {1.0, 2.0}));
  }
  entries.push_back(entry_with(12, -0.5));                  // no weak score
  entries.push_back(entry_with(13, 0, true, 0.5, {1.0}));   // failed
  HistoryEntry no_kl = entry_with(14, -0.5, false, 0.5);
  entries.push_back(no_kl);                                 // weak-only run

  CorrelationReport rep = correlation_from_history(entries);
  CHECK(rep.points == 12);
  std::vector<double> xs, ys;
  for (std::size_t r = 0; r < 12; ++r) {
    xs.push_back(entries[r].fitness);
    ys.push_back(*entries[r].weak_fitness);
  }
  CHECK(rep.pearson == doctest::Approx(oracle::pearson_naive(xs, ys)));
  CHECK(rep.spearman == doctest::Approx(oracle::spearman_naive(xs, ys)));

  CHECK_THROWS_AS(correlation_from_history({entries[12]}), ValueError);
}

TEST_CASE("trajectory csv holds one row per entry per key") {
  const char* path = "report_trajectory_test.csv";
  std::vector<HistoryEntry> entries = {entry_with(0, -1.0),
                                       entry_with(1, -0.5)};
  entries[1].genome[3] = 0.125;
  write_trajectory_csv(entries, path);
  std::vector<std::string> lines = read_lines(path);
  REQUIRE(lines.size() == 1 + entries.size() * genome_dim());
  CHECK(lines[0] == "round,key,value");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    CHECK(comma_count(lines[i]) == 2);
  }
  // Row order: entry-major, keys in canonical order within an entry.
  CHECK(lines[1] == "0,AA,0.5");
  const std::string fourth_key = canonical_keys()[3];
  CHECK(lines[1 + genome_dim() + 3] == "1," + fourth_key + ",0.125");
  std::remove(path);
}

TEST_CASE("heatmap csv decomposes keys into modality and task") {
  const char* path = "report_heatmap_test.csv";
  DenseArray genome = DenseArray::full({genome_dim()}, 0.25);
  genome[key_index("GD2")] = 0.75;
  write_heatmap_csv(genome, path);
  std::vector<std::string> lines = read_lines(path);
  REQUIRE(lines.size() == 1 + genome_dim());
  CHECK(lines[0] == "modality,task,key,weight");
  bool saw_gd2 = false, saw_rr = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    CHECK(comma_count(lines[i]) == 3);
    if (lines[i] == "grey,D2,GD2,0.75") saw_gd2 = true;
    if (lines[i] == "main,R,RR,0.25") saw_rr = true;
  }
  CHECK(saw_gd2);
  CHECK(saw_rr);
  CHECK_THROWS_AS(write_heatmap_csv(DenseArray::zeros({3}), path),
                  ValueError);
  std::remove(path);
}

TEST_CASE("scatter and correlation csv layouts are fixed") {
  const char* scatter_path = "report_scatter_test.csv";
  std::vector<HistoryEntry> entries = {
      entry_with(0, -1.5, false, 0.5, {1.5}),
      entry_with(1, -0.25, false, 0.625, {0.25}),
      entry_with(2, -9.0)};  // filtered: no weak fitness
  write_scatter_csv(entries, scatter_path);
  std::vector<std::string> lines = read_lines(scatter_path);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "round,elo_fitness,weak_fitness");
  CHECK(lines[1] == "0,-1.5,0.5");
  CHECK(lines[2] == "1,-0.25,0.625");
  std::remove(scatter_path);

  const char* corr_path = "report_correlation_test.csv";
  CorrelationReport rep;
  rep.pearson = -0.5;
  rep.spearman = -0.4375;
  rep.points = 17;
  write_correlation_csv(rep, corr_path);
  lines = read_lines(corr_path);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "pearson,spearman,points");
  CHECK(lines[1] == "-0.5,-0.4375,17");
  std::remove(corr_path);
}

TEST_CASE("strategy summary and evals csv layouts are fixed") {
  const char* path = "report_summary_test.csv";
  StrategyRunSummary a;
  a.strategy = "cmaes";
  a.seed = 1;
  a.best = -0.5;
  a.mean = -1.25;
  a.stddev = 0.5;
  a.evals = 60;
  a.failures = 2;
  write_strategy_summary_csv({a}, path);
  std::vector<std::string> lines = read_lines(path);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "strategy,seed,evals,failures,best,mean,stddev");
  CHECK(lines[1] == "cmaes,1,60,2,-0.5,-1.25,0.5");
  std::remove(path);

  const char* evals_path = "report_evals_test.csv";
  EvalResult kmeans_result;
  kmeans_result.protocol = EvalProtocol::KMeansProbe;
  kmeans_result.accuracy = 0.8125;
  kmeans_result.fit_count = 16;
  kmeans_result.score_count = 16;
  EvalResult linear_result;
  linear_result.protocol = EvalProtocol::LinearProbe;
  linear_result.accuracy = 0.875;
  linear_result.fit_count = 16;
  linear_result.score_count = 16;
  write_evals_csv({kmeans_result, linear_result}, evals_path);
  lines = read_lines(evals_path);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "protocol,accuracy,fit_count,score_count");
  CHECK(lines[1] == "kmeans,0.8125,16,16");
  CHECK(lines[2] == "linear,0.875,16,16");
  std::remove(evals_path);
}

TEST_CASE("csv values round-trip through 17 significant digits") {
  const char* path = "report_precision_test.csv";
  std::vector<HistoryEntry> entries = {entry_with(0, -1.0)};
  entries[0].genome[0] = 1.0 / 3.0;
  write_trajectory_csv(entries, path);
  std::vector<std::string> lines = read_lines(path);
  const std::string& row = lines[1];  // 0,AA,<value>
  const std::string value = row.substr(row.rfind(',') + 1);
  CHECK(std::strtod(value.c_str(), nullptr) == 1.0 / 3.0);
  std::remove(path);
}
