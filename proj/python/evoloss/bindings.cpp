// Python bindings for the core operations: genome keys, loss weights,
// clustering fitness, CMA-ES and the evolution driver.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evoloss/cmaes.hpp"
#include "evoloss/config.hpp"
#include "evoloss/errors.hpp"
#include "evoloss/evolve.hpp"
#include "evoloss/fitness.hpp"
#include "evoloss/keys.hpp"
#include "evoloss/losses.hpp"
#include "evoloss/optim.hpp"

namespace py = pybind11;
using namespace evoloss;

namespace {

using NumpyArray =
    py::array_t<double, py::array::c_style | py::array::forcecast>;

DenseArray to_dense(const NumpyArray& arr) {
  if (arr.ndim() == 1) {
    DenseArray out = DenseArray::zeros({static_cast<std::size_t>(arr.shape(0))});
    std::copy(arr.data(), arr.data() + arr.size(), out.data());
    return out;
  }
  if (arr.ndim() == 2) {
    DenseArray out = DenseArray::zeros({static_cast<std::size_t>(arr.shape(0)),
                                        static_cast<std::size_t>(arr.shape(1))});
    std::copy(arr.data(), arr.data() + arr.size(), out.data());
    return out;
  }
  throw ValueError("expected a 1-D or 2-D array, got ndim " +
                   std::to_string(arr.ndim()));
}

std::vector<double> to_vector(const DenseArray& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Core operations of the loss-evolution framework";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ValueError>(m, "ValueError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("canonical_keys", [] { return canonical_keys(); },
        "All genome keys in canonical (sorted) order");
  m.def("genome_dim", &genome_dim);
  m.def("cosine_warmup_lr", &cosine_warmup_lr, py::arg("step"),
        py::arg("total_steps"), py::arg("base_lr"), py::arg("warmup_steps"));

  m.def("zipf_prior",
        [](std::size_t k, double s) { return to_vector(zipf_prior(k, s)); },
        py::arg("k"), py::arg("s"));
  m.def("kl_divergence",
        [](std::vector<double> p, std::vector<double> q) {
          return kl_divergence(DenseArray::vector(std::move(p)),
                               DenseArray::vector(std::move(q)));
        },
        py::arg("p"), py::arg("q"));
  m.def("elo_fitness",
        [](const NumpyArray& embeddings, std::size_t k, double s,
           std::size_t trials, std::uint64_t seed) {
          FitnessReport rep = elo_fitness(to_dense(embeddings), k, s, trials, seed);
          py::dict out;
          out["fitness"] = rep.fitness;
          out["mean_kl"] = rep.mean_kl;
          out["per_trial_kl"] = rep.per_trial_kl;
          out["cluster_masses"] = to_vector(rep.cluster_masses);
          out["prior"] = to_vector(rep.prior);
          return out;
        },
        py::arg("embeddings"), py::arg("k"), py::arg("s") = 1.0,
        py::arg("trials") = 20, py::arg("seed") = 0);
  m.def("weak_fitness",
        [](const NumpyArray& embeddings, std::vector<int> labels,
           std::size_t k, std::size_t trials, std::uint64_t seed) {
          return weak_fitness(to_dense(embeddings), labels, k, trials, seed);
        },
        py::arg("embeddings"), py::arg("labels"), py::arg("k"),
        py::arg("trials") = 20, py::arg("seed") = 0);

  py::class_<LossWeights>(m, "LossWeights")
      .def(py::init<>())
      .def(py::init([](std::vector<double> genome) {
             return LossWeights(DenseArray::vector(std::move(genome)));
           }),
           py::arg("genome"))
      .def("get", &LossWeights::get, py::arg("key"))
      .def("set", &LossWeights::set, py::arg("key"), py::arg("value"))
      .def("genome", [](const LossWeights& w) { return w.raw(); })
      .def("save", &LossWeights::save, py::arg("path"))
      .def_static("load", &LossWeights::load, py::arg("path"))
      .def("__eq__",
           [](const LossWeights& a, const LossWeights& b) { return a == b; });

  py::class_<Cmaes>(m, "Cmaes")
      .def(py::init([](std::size_t dim, std::size_t lam, double sigma0,
                       std::uint64_t seed) {
             CmaesConfig cfg;
             cfg.dim = dim;
             cfg.lambda = lam;
             cfg.sigma0 = sigma0;
             cfg.seed = seed;
             return new Cmaes(cfg);
           }),
           py::arg("dim"), py::arg("lambda_") = 0, py::arg("sigma0") = 0.3,
           py::arg("seed") = 0)
      .def("ask",
           [](Cmaes& es) {
             std::vector<std::vector<double>> out;
             for (const DenseArray& g : es.ask()) out.push_back(to_vector(g));
             return out;
           })
      .def("tell",
           [](Cmaes& es, const std::vector<std::vector<double>>& genomes,
              const std::vector<double>& fitness) {
             std::vector<DenseArray> gs;
             for (const auto& g : genomes)
               gs.push_back(DenseArray::vector(g));
             es.tell(gs, fitness);
           },
           py::arg("genomes"), py::arg("fitness"))
      .def_property_readonly("mean", &Cmaes::mean)
      .def_property_readonly("sigma", &Cmaes::sigma)
      .def_property_readonly("lambda_", &Cmaes::lambda)
      .def_property_readonly("generation", &Cmaes::generation)
      .def_property_readonly("repair_count", &Cmaes::repair_count);

  m.def("evolve",
        [](const std::string& strategy, std::size_t dim, std::size_t budget,
           std::uint64_t seed, const py::function& fitness) {
          EvolveOptions opt;
          opt.strategy = strategy_from_name(strategy);
          opt.dim = dim;
          opt.budget = budget;
          opt.seed = seed;
          FitnessFn fn = [&fitness](const DenseArray& genome,
                                    std::uint64_t eval_seed) {
            FitnessOutcome out;
            out.fitness =
                fitness(to_vector(genome), eval_seed).cast<double>();
            return out;
          };
          EvolutionState state = evolve(opt, fn);
          py::dict out;
          out["rounds"] = state.history.size();
          out["has_best"] = state.has_best;
          if (state.has_best) {
            out["best_genome"] = to_vector(state.best.genome);
            out["best_fitness"] = state.best.fitness;
            out["best_round"] = state.best.round_born;
          }
          std::vector<double> trace;
          for (const EvolutionRecord& r : state.history)
            trace.push_back(r.outcome.fitness);
          out["fitness_trace"] = trace;
          return out;
        },
        py::arg("strategy"), py::arg("dim"), py::arg("budget"),
        py::arg("seed"), py::arg("fitness"));

  m.def("default_config_json", [] { return config_to_json(default_config()); });
  m.def("normalize_config",
        [](const std::string& text) {
          return config_to_json(config_from_json(text));
        },
        py::arg("text"),
        "Parse + reserialize a config; identity on normalized input");
}
