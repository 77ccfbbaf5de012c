#include "evoloss/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "evoloss/errors.hpp"

namespace evoloss {

Strategy strategy_from_name(const std::string& name) {
  if (name == "cmaes") return Strategy::Cmaes;
  if (name == "tournament") return Strategy::Tournament;
  if (name == "random") return Strategy::Random;
  if (name == "grid") return Strategy::Grid;
  throw ValueError("unknown strategy '" + name +
                   "' (expected cmaes, tournament, random or grid)");
}

std::string strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::Cmaes: return "cmaes";
    case Strategy::Tournament: return "tournament";
    case Strategy::Random: return "random";
    case Strategy::Grid: return "grid";
  }
  throw ValueError("invalid strategy enum value");
}

DenseArray mutate(const DenseArray& genome, Rng& rng) {
  if (genome.size() == 0) throw ValueError("mutate: empty genome");
  DenseArray child = genome;
  std::size_t coord = rng.uniform_index(genome.size());
  child.data()[coord] = rng.uniform();
  return child;
}

std::size_t tournament_select(const std::vector<Individual>& population,
                              std::size_t t_size, Rng& rng) {
  if (population.empty())
    throw ValueError("tournament_select: empty population");
  if (t_size == 0) throw ValueError("tournament_select: t_size must be positive");
  std::vector<std::size_t> idx(population.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const std::size_t draws = std::min(t_size, population.size());
  // Partial Fisher-Yates: the first `draws` entries are a uniform sample
  // without replacement.
  for (std::size_t i = 0; i < draws; ++i) {
    std::size_t j = i + rng.uniform_index(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  std::size_t best = idx[0];
  for (std::size_t i = 1; i < draws; ++i) {
    std::size_t cand = idx[i];
    double bf = population[best].fitness;
    double cf = population[cand].fitness;
    if (cf > bf || (cf == bf && cand < best)) best = cand;
  }
  return best;
}

FitnessCache::FitnessCache(FitnessFn fn, std::uint64_t eval_seed)
    : fn_(std::move(fn)), eval_seed_(eval_seed) {}

const FitnessOutcome& FitnessCache::score(const DenseArray& genome,
                                          bool* cache_hit) {
  std::vector<double> key(genome.data(), genome.data() + genome.size());
  auto it = cache_.find(key);
  const bool hit = it != cache_.end();
  if (cache_hit) *cache_hit = hit;
  if (!hit) {
    ++calls_;
    FitnessOutcome outcome;
    try {
      outcome = fn_(genome, eval_seed_);
    } catch (const std::exception& e) {
      outcome = FitnessOutcome{};
      outcome.failed = true;
      outcome.error = e.what();
    }
    if (!outcome.failed && !std::isfinite(outcome.fitness)) {
      outcome.failed = true;
      outcome.error = "non-finite fitness";
    }
    if (outcome.failed)
      outcome.fitness = -std::numeric_limits<double>::infinity();
    it = cache_.emplace(std::move(key), std::move(outcome)).first;
  }
  return it->second;
}

namespace {

DenseArray random_genome(std::size_t dim, Rng& rng) {
  DenseArray g = DenseArray::zeros({dim});
  for (std::size_t i = 0; i < dim; ++i) g.data()[i] = rng.uniform();
  return g;
}

class Scorer {
 public:
  Scorer(EvolutionState& state, const FitnessFn& fitness, std::uint64_t eval_seed)
      : state_(state), eval_seed_(eval_seed), cache_(fitness, eval_seed) {}

  const FitnessOutcome& score(const DenseArray& genome) {
    bool hit = false;
    const FitnessOutcome& out = cache_.score(genome, &hit);
    const std::size_t round = state_.history.size();
    EvolutionRecord rec;
    rec.round = round;
    rec.genome = genome;
    rec.outcome = out;
    rec.cache_hit = hit;
    state_.history.push_back(std::move(rec));
    if (!out.failed &&
        (!state_.has_best || out.fitness > state_.best.fitness)) {
      state_.best = Individual{genome, out.fitness, true, eval_seed_, round};
      state_.has_best = true;
    }
    return out;
  }

 private:
  EvolutionState& state_;
  std::uint64_t eval_seed_;
  FitnessCache cache_;
};

Individual make_individual(const DenseArray& genome, const FitnessOutcome& out,
                           std::uint64_t eval_seed, std::size_t round) {
  return Individual{genome, out.fitness, true, eval_seed, round};
}

void run_random(EvolutionState& st, Scorer& scorer, Rng& rng) {
  const EvolveOptions& opt = st.options;
  for (std::size_t r = 0; r < opt.budget; ++r) {
    DenseArray g = random_genome(opt.dim, rng);
    const FitnessOutcome& out = scorer.score(g);
    st.population.push_back(make_individual(g, out, opt.seed, r));
  }
}

void run_grid(EvolutionState& st, Scorer& scorer) {
  const EvolveOptions& opt = st.options;
  const std::size_t levels = opt.grid_levels;
  if (levels == 0) throw ValueError("grid strategy: grid_levels must be positive");
  std::vector<std::size_t> idx(opt.dim, 0);
  for (std::size_t r = 0; r < opt.budget; ++r) {
    DenseArray g = DenseArray::zeros({opt.dim});
    for (std::size_t i = 0; i < opt.dim; ++i)
      g.data()[i] = levels == 1
                        ? 0.5
                        : static_cast<double>(idx[i]) /
                              static_cast<double>(levels - 1);
    const FitnessOutcome& out = scorer.score(g);
    st.population.push_back(make_individual(g, out, opt.seed, r));
    // Odometer advance, last axis fastest; full wrap means the lattice is
    // exhausted before the budget.
    std::size_t axis = opt.dim;
    bool wrapped = true;
    while (axis > 0) {
      --axis;
      if (++idx[axis] < levels) {
        wrapped = false;
        break;
      }
      idx[axis] = 0;
    }
    if (wrapped) break;
  }
}

void run_tournament(EvolutionState& st, Scorer& scorer, Rng& rng) {
  const EvolveOptions& opt = st.options;
  if (opt.tournament_capacity == 0)
    throw ValueError("tournament strategy: capacity must be positive");
  if (opt.tournament_size == 0)
    throw ValueError("tournament strategy: tournament_size must be positive");
  for (std::size_t r = 0; r < opt.budget; ++r) {
    DenseArray g =
        st.population.size() < opt.tournament_capacity
            ? random_genome(opt.dim, rng)
            : mutate(
                  st.population[tournament_select(st.population,
                                                  opt.tournament_size, rng)]
                      .genome,
                  rng);
    const FitnessOutcome& out = scorer.score(g);
    st.population.push_back(make_individual(g, out, opt.seed, r));
    if (st.population.size() > opt.tournament_capacity)
      st.population.erase(st.population.begin());
  }
}

void run_cmaes(EvolutionState& st, Scorer& scorer) {
  const EvolveOptions& opt = st.options;
  CmaesConfig cfg;
  cfg.dim = opt.dim;
  cfg.lambda = opt.cma_lambda;
  cfg.sigma0 = opt.cma_sigma0;
  cfg.seed = opt.seed;
  Cmaes es(cfg);
  std::size_t spent = 0;
  while (spent < opt.budget) {
    std::vector<DenseArray> xs = es.ask();
    const std::size_t take = std::min(xs.size(), opt.budget - spent);
    std::vector<double> fit(xs.size(),
                            -std::numeric_limits<double>::infinity());
    std::vector<Individual> generation;
    for (std::size_t i = 0; i < take; ++i) {
      const FitnessOutcome& out = scorer.score(xs[i]);
      fit[i] = out.fitness;
      generation.push_back(make_individual(xs[i], out, opt.seed, spent + i));
    }
    st.population = std::move(generation);
    spent += take;
    // A truncated final generation is recorded but cannot drive an update.
    if (take < xs.size()) break;
    es.tell(xs, fit);
  }
  st.cma_repairs = es.repair_count();
}

}  // namespace

EvolutionState evolve(const EvolveOptions& options, const FitnessFn& fitness) {
  if (options.dim == 0) throw ValueError("evolve: dim must be positive");
  if (options.budget == 0) throw ValueError("evolve: budget must be positive");
  EvolutionState st;
  st.options = options;
  Scorer scorer(st, fitness, options.seed);
  Rng rng(options.seed);
  switch (options.strategy) {
    case Strategy::Random: run_random(st, scorer, rng); break;
    case Strategy::Grid: run_grid(st, scorer); break;
    case Strategy::Tournament: run_tournament(st, scorer, rng); break;
    case Strategy::Cmaes: run_cmaes(st, scorer); break;
  }
  return st;
}

}  // namespace evoloss
