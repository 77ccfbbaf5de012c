#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evoloss/cmaes.hpp"
#include "evoloss/dense_array.hpp"
#include "evoloss/rng.hpp"

namespace evoloss {

enum class Strategy { Cmaes, Tournament, Random, Grid };

Strategy strategy_from_name(const std::string& name);
std::string strategy_name(Strategy strategy);

struct Individual {
  DenseArray genome;
  double fitness = -std::numeric_limits<double>::infinity();
  bool evaluated = false;
  std::uint64_t eval_seed = 0;
  std::size_t round_born = 0;
};

// Outcome of scoring one genome. `failed` marks evaluations that aborted
// (non-finite loss, thrown errors); the driver records them at -inf fitness
// and keeps going.
struct FitnessOutcome {
  double fitness = -std::numeric_limits<double>::infinity();
  std::vector<double> per_trial_kl;
  std::optional<double> weak_fitness;
  bool failed = false;
  std::string error;
};

using FitnessFn =
    std::function<FitnessOutcome(const DenseArray& genome, std::uint64_t eval_seed)>;

// Memoizes outcomes by exact genome bytes for one fixed eval seed, so a
// revisited genome never re-trains. Thrown evaluations are recorded as
// failed outcomes (and cached too).
class FitnessCache {
 public:
  FitnessCache(FitnessFn fn, std::uint64_t eval_seed);
  const FitnessOutcome& score(const DenseArray& genome,
                              bool* cache_hit = nullptr);
  // Underlying evaluations actually run (cache misses).
  std::size_t calls() const { return calls_; }

 private:
  FitnessFn fn_;
  std::uint64_t eval_seed_;
  std::size_t calls_ = 0;
  std::map<std::vector<double>, FitnessOutcome> cache_;
};

struct EvolutionRecord {
  std::size_t round = 0;
  DenseArray genome;
  FitnessOutcome outcome;
  bool cache_hit = false;
};

struct EvolveOptions {
  Strategy strategy = Strategy::Cmaes;
  std::size_t dim = 0;
  std::size_t budget = 0;  // exact number of evaluation slots to spend
  std::uint64_t seed = 0;
  std::size_t tournament_capacity = 25;
  std::size_t tournament_size = 5;
  std::size_t grid_levels = 2;  // points per axis
  std::size_t cma_lambda = 0;   // 0 -> default
  double cma_sigma0 = 0.3;
};

struct EvolutionState {
  EvolveOptions options;
  std::vector<Individual> population;
  std::vector<EvolutionRecord> history;
  Individual best;
  bool has_best = false;
  std::size_t cma_repairs = 0;
};

// Resamples one uniformly chosen coordinate from U[0,1].
DenseArray mutate(const DenseArray& genome, Rng& rng);

// Samples `t_size` distinct population indices and returns the index of the
// fittest (ties break toward the smaller index).
std::size_t tournament_select(const std::vector<Individual>& population,
                              std::size_t t_size, Rng& rng);

// Runs one strategy until the evaluation budget is spent. Repeated genomes
// are served from a cache instead of re-evaluated; failed evaluations score
// -inf. Fully deterministic for a fixed options struct and fitness function.
EvolutionState evolve(const EvolveOptions& options, const FitnessFn& fitness);

}  // namespace evoloss
