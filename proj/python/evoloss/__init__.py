"""Python bindings for the loss-evolution core."""

from ._core import (
    Cmaes,
    ConfigError,
    IoError,
    LossWeights,
    ShapeError,
    ValueError,
    canonical_keys,
    cosine_warmup_lr,
    default_config_json,
    elo_fitness,
    evolve,
    genome_dim,
    kl_divergence,
    normalize_config,
    weak_fitness,
    zipf_prior,
)

__all__ = [
    "Cmaes",
    "ConfigError",
    "IoError",
    "LossWeights",
    "ShapeError",
    "ValueError",
    "canonical_keys",
    "cosine_warmup_lr",
    "default_config_json",
    "elo_fitness",
    "evolve",
    "genome_dim",
    "kl_divergence",
    "normalize_config",
    "weak_fitness",
    "zipf_prior",
]
