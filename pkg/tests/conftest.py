"""Shared generators for the test suite.

Random spaces are built from Euclidean point clouds and then pushed through
the exact triangle closure, so every generated matrix passes validation with
zero tolerance.  All randomness is seeded; the suite is deterministic.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from mmconc import (
    FiniteMMSpace,
    RealMeasure,
    exact_triangle_closure,
    validate_space,
)

settings.register_profile("suite", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("suite")


def random_space(
    rng: np.random.Generator,
    n: int,
    dim: int = 3,
    uniform_weights: bool = False,
    total_mass: float = 1.0,
) -> FiniteMMSpace:
    """A validated random space: Euclidean cloud -> exact closure -> weights."""
    while True:
        pts = rng.uniform(0.0, 1.0, size=(n, dim))
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        np.fill_diagonal(dist, 0.0)
        off = dist[~np.eye(n, dtype=bool)]
        if n == 1 or off.min() > 1e-3:
            break
    dist = exact_triangle_closure(np.maximum(dist, dist.T))
    if uniform_weights:
        w = np.full(n, total_mass / n)
    else:
        w = rng.uniform(0.2, 1.0, size=n)
        w = w / w.sum() * total_mass
    labels = tuple(f"p{i}" for i in range(n))
    return validate_space(labels, dist, w)


def random_measure(rng: np.random.Generator, k: int, span: float = 3.0) -> RealMeasure:
    """A discrete measure on the line with distinct atoms and positive weights."""
    positions = np.sort(rng.uniform(0.0, span, size=k))
    # keep atoms distinct so quantile logic sees k genuine positions
    positions += np.arange(k) * 1e-6
    weights = rng.uniform(0.05, 1.0, size=k)
    weights = weights / weights.sum()
    return RealMeasure.from_atoms(positions, weights)


def line_space(positions, weights=None) -> FiniteMMSpace:
    """Points on the real line with |x - y| distances (exactly subadditive
    after closure, which changes nothing for collinear configurations)."""
    positions = np.asarray(positions, dtype=float)
    n = positions.size
    dist = np.abs(positions[:, None] - positions[None, :])
    dist = exact_triangle_closure(dist)
    if weights is None:
        weights = np.full(n, 1.0 / n)
    labels = tuple(f"x{i}" for i in range(n))
    return validate_space(labels, dist, np.asarray(weights, dtype=float))


@pytest.fixture(scope="session")
def two_point() -> FiniteMMSpace:
    return line_space([0.0, 1.0], [0.5, 0.5])


@pytest.fixture(scope="session")
def unit_interval_grid() -> FiniteMMSpace:
    """Five evenly spaced points on [0, 1], uniform mass."""
    return line_space(np.linspace(0.0, 1.0, 5))
