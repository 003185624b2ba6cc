"""Seeded random 1-d datasets used by experiments and the acceptance corpus."""

from __future__ import annotations

import numpy as np

from .core import WeightedPointSet, as_points


def _uniform(rng, n):
    return rng.random(n)


def _gaussian(rng, n):
    return rng.standard_normal(n)


def _exponential(rng, n):
    return rng.exponential(size=n)


def _bimodal(rng, n):
    half = n // 2
    return np.concatenate([rng.normal(-3.0, 1.0, half), rng.normal(3.0, 1.0, n - half)])


def _clustered(rng, n, clusters=10):
    centers = rng.random(clusters) * 100.0
    return rng.choice(centers, n) + rng.normal(0.0, 0.5, n)


GENERATORS = {
    "uniform": _uniform,
    "gaussian": _gaussian,
    "exponential": _exponential,
    "bimodal": _bimodal,
    "clustered": _clustered,
}
CORPUS = tuple(GENERATORS)


def sample_1d(name: str, n: int, seed: int = 0) -> np.ndarray:
    """Draw ``n`` coordinates from the named distribution."""
    if name not in GENERATORS:
        raise ValueError(f"unknown dataset {name!r}; choose from {sorted(GENERATORS)}")
    if n < 1:
        raise ValueError("n must be positive")
    return GENERATORS[name](np.random.default_rng(seed), n)


def dataset_1d(name: str, n: int, seed: int = 0) -> WeightedPointSet:
    return as_points(sample_1d(name, n, seed))


def corpus(n: int = 100_000, seed: int = 0) -> dict[str, np.ndarray]:
    """All corpus distributions; each gets its own seed offset."""
    return {name: sample_1d(name, n, seed + i) for i, name in enumerate(CORPUS)}


def unit_ball_points(n: int, d: int, seed: int = 0) -> np.ndarray:
    """Points uniform in the closed unit ball of dimension ``d``."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = rng.random(n) ** (1.0 / d)
    return g * r[:, None]
