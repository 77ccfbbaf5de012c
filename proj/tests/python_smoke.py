"""Smoke test of the python bindings: exact arithmetic, file round-trips and
short optimizer runs. Plain asserts; exits nonzero on the first failure."""

import math
import os
import tempfile

import numpy as np

import evoloss


def test_key_catalog():
    keys = evoloss.canonical_keys()
    assert len(keys) == evoloss.genome_dim() == 31
    assert keys == sorted(keys)
    assert keys[0] == "AA" and keys[-1] == "RS"
    assert "GD2" in keys and "RC" in keys


def test_zipf_prior():
    prior = evoloss.zipf_prior(3, 1.0)
    expected = [6 / 11, 3 / 11, 2 / 11]
    assert all(abs(a - b) <= 1e-12 for a, b in zip(prior, expected))
    assert abs(sum(evoloss.zipf_prior(7, 0.5)) - 1.0) <= 1e-12


def test_kl_divergence():
    p = [0.2, 0.3, 0.5]
    assert abs(evoloss.kl_divergence(p, p)) <= 1e-12
    assert abs(evoloss.kl_divergence([1.0, 0.0], [0.5, 0.5]) - math.log(2)) <= 1e-9
    try:
        evoloss.kl_divergence([0.9, 0.9], [0.5, 0.5])
    except ValueError:
        pass
    else:
        raise AssertionError("unnormalized input must raise")


def test_loss_weights_roundtrip():
    w = evoloss.LossWeights()
    w.set("RR", 1 / 3)
    w.set("GD2", 0.75)
    assert w.get("RR") == 1 / 3
    assert len(w.genome()) == 31
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "w.weights")
        w.save(path)
        assert evoloss.LossWeights.load(path) == w
    try:
        evoloss.LossWeights([0.5] * 30)
    except ValueError:
        pass
    else:
        raise AssertionError("wrong genome length must raise")


def test_cosine_warmup_lr():
    assert abs(evoloss.cosine_warmup_lr(0, 100, 0.5, 10) - 0.05) <= 1e-12
    assert abs(evoloss.cosine_warmup_lr(9, 100, 0.5, 10) - 0.5) <= 1e-12
    assert abs(evoloss.cosine_warmup_lr(55, 100, 0.5, 10) - 0.25) <= 1e-12
    assert evoloss.cosine_warmup_lr(100, 100, 0.5, 10) == 0.0


def _blob_embeddings(counts, spread=0.05, dim=6):
    rng = np.random.RandomState(7)
    rows = []
    for c, n in enumerate(counts):
        center = np.zeros(dim)
        center[c % dim] = 3.0 * (1 + c // dim)
        rows.append(center + spread * rng.randn(n, dim))
    return np.vstack(rows)


def test_elo_fitness():
    skewed = _blob_embeddings([24, 12, 8, 6])
    report = evoloss.elo_fitness(skewed, k=4, s=1.0, trials=3, seed=5)
    assert report["fitness"] == -report["mean_kl"]
    assert len(report["per_trial_kl"]) == 3
    masses = report["cluster_masses"]
    assert masses == sorted(masses, reverse=True)
    assert abs(sum(masses) - 1.0) <= 1e-9
    replay = evoloss.elo_fitness(skewed, k=4, s=1.0, trials=3, seed=5)
    assert replay["fitness"] == report["fitness"]
    uniform = _blob_embeddings([12, 12, 12, 12])
    worse = evoloss.elo_fitness(uniform, k=4, s=1.0, trials=3, seed=5)
    assert report["fitness"] > worse["fitness"]


def test_weak_fitness():
    emb = _blob_embeddings([10, 10, 10])
    labels = [0] * 10 + [1] * 10 + [2] * 10
    acc = evoloss.weak_fitness(emb, labels, k=3, trials=3, seed=2)
    assert 0.9 < acc <= 1.0


def test_cmaes_sphere():
    es = evoloss.Cmaes(dim=8, seed=3)
    assert es.lambda_ == 4 + int(3 * math.log(8))
    first_best = None
    for _ in range(40):
        genomes = es.ask()
        fitness = [-sum((x - 0.3) ** 2 for x in g) for g in genomes]
        if first_best is None:
            first_best = max(fitness)
        es.tell(genomes, fitness)
    assert max(abs(m - 0.3) for m in es.mean) < 0.1
    assert -sum((m - 0.3) ** 2 for m in es.mean) > first_best
    try:
        es.tell([[0.5] * 8] * es.lambda_, [0.0] * es.lambda_)
    except ValueError:
        pass
    else:
        raise AssertionError("tell without ask must raise")


def test_evolve_random():
    def sphere(genome, seed):
        return -sum((x - 0.25) ** 2 for x in genome)

    out = evoloss.evolve("random", dim=5, budget=20, seed=9, fitness=sphere)
    assert out["rounds"] == 20
    assert out["has_best"]
    assert len(out["fitness_trace"]) == 20
    assert out["best_fitness"] == max(out["fitness_trace"])
    replay = evoloss.evolve("random", dim=5, budget=20, seed=9, fitness=sphere)
    assert replay["fitness_trace"] == out["fitness_trace"]


def test_config_normalization():
    default = evoloss.default_config_json()
    assert evoloss.normalize_config(default) == default
    nested = evoloss.normalize_config('{"seed": 9}')
    assert '"seed": 9' in nested
    try:
        evoloss.normalize_config('{"sede": 9}')
    except ValueError:
        pass
    else:
        raise AssertionError("unknown config key must raise")


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok: {test.__name__}")
    print(f"python_smoke: {len(tests)} checks passed")


if __name__ == "__main__":
    main()
