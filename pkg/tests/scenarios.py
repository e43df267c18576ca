"""Seeded random scenarios from the supported families."""

from __future__ import annotations

import numpy as np

from varpricing import CostFunction, PiecewiseLinearDensity, Uniform


def random_distribution(rng: np.random.Generator):
    if rng.random() < 0.5:
        return Uniform(float(rng.uniform(0.5, 2.0)))
    n = int(rng.integers(2, 5))
    x = np.concatenate([[0.0], np.sort(rng.uniform(0.1, 1.0, n - 1)), [1.0]])
    x = np.unique(np.round(x, 3)) * float(rng.uniform(0.5, 2.0))
    f = rng.uniform(0.2, 2.0, x.size)
    return PiecewiseLinearDensity.normalized(np.column_stack([x, f]).tolist())


def random_cost(rng: np.random.Generator, label: int, theta_max: float) -> CostFunction:
    # non-negative coefficients with a positive linear or quadratic term keep g strictly increasing
    deg = int(rng.integers(1, 4))
    coeffs = rng.uniform(0.0, 1.0, deg + 1)
    coeffs[0] = rng.uniform(0.0, 0.3)
    coeffs[1] *= rng.random() < 0.5
    coeffs[-1] = max(coeffs[-1], 0.05)
    return CostFunction(tuple(coeffs.tolist()), label, theta_max)


def random_scenario(seed: int):
    rng = np.random.default_rng(seed)
    d = random_distribution(rng)
    return d, random_cost(rng, 1, d.theta_max), random_cost(rng, 2, d.theta_max)
