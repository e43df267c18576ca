"""Per-user serving cost as a polynomial in the mean type of the served interval."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize_scalar

from .distribution import DegenerateIntervalError, DomainError, TypeDistribution

MONOTONE_GRID_STEP = 1e-3
SPLIT_STRICT_TOL = 1e-9


@dataclass(frozen=True)
class CostFunction:
    """c(a, b) = g(mu(a, b)) with g(mu) = sum_k coefficients[k] * mu**k.

    ``g`` must be strictly increasing on [0, theta_max]; this is checked on a
    1e-3 grid at construction.
    """

    coefficients: tuple
    label: int = 1
    theta_max: float = 1.0
    _deriv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coeffs = tuple(float(x) for x in self.coefficients)
        if not coeffs or not all(np.isfinite(coeffs)):
            raise ValueError("cost polynomial needs finite coefficients")
        if self.label not in (1, 2):
            raise ValueError(f"provider label must be 1 or 2, got {self.label}")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "_deriv", P.polyder(np.array(coeffs)))
        n = int(round(self.theta_max / MONOTONE_GRID_STEP))
        grid = np.linspace(0.0, self.theta_max, max(n, 2) + 1)
        if np.any(np.diff(self.g(grid)) <= 0) or np.any(self.dg(grid) < 0):
            raise ValueError(f"cost polynomial {coeffs} is not strictly increasing on [0, {self.theta_max}]")

    def g(self, mu):
        return P.polyval(mu, self.coefficients)

    def dg(self, mu):
        return P.polyval(mu, self._deriv)

    def relabel(self, label: int) -> "CostFunction":
        return CostFunction(self.coefficients, label, self.theta_max)

    def to_config(self) -> dict:
        return {"provider": self.label, "poly": list(self.coefficients)}


def _check_domain(c: CostFunction, d: TypeDistribution) -> None:
    if d.theta_max > c.theta_max + 1e-12:
        raise DomainError(f"cost validated on [0, {c.theta_max}] but support reaches {d.theta_max}")


def cost(c: CostFunction, d: TypeDistribution, a: float, b: float) -> float:
    """Per-user cost when exactly the users in [a, b] choose this provider."""
    _check_domain(c, d)
    return float(c.g(d.mean_type(a, b)))


def total_cost(c: CostFunction, d: TypeDistribution, a, b):
    """Vectorised mass * cost over the interval between a and b; 0 for empty intervals."""
    m, mu = d.interval_stats(a, b)
    return np.where(m > 0, m * c.g(mu), 0.0)


class SplitClass(enum.Enum):
    STRICTLY_SPLIT_CONVEX = "StrictlySplitConvex"
    SPLIT_CONVEX = "SplitConvex"
    NOT_SPLIT_CONVEX = "NotSplitConvex"

    def at_least(self, other: "SplitClass") -> bool:
        order = [SplitClass.NOT_SPLIT_CONVEX, SplitClass.SPLIT_CONVEX, SplitClass.STRICTLY_SPLIT_CONVEX]
        return order.index(self) >= order.index(other)


@dataclass(frozen=True)
class SplitConvexityReport:
    cls: SplitClass
    worst_cutoff: float
    worst_gap: float


def split_gap(c: CostFunction, d: TypeDistribution, t):
    """F(t) c(0,t) + (1-F(t)) c(t,theta_max) - c(0,theta_max), vectorised in t."""
    th = d.theta_max
    return total_cost(c, d, 0.0, t) + total_cost(c, d, t, th) - total_cost(c, d, 0.0, th)


def split_convexity(c: CostFunction, d: TypeDistribution, grid_step: float = 1e-3) -> SplitConvexityReport:
    """Classify c by evaluating the market-splitting inequality on interior cutoffs.

    The grid minimum is refined inside its neighbouring cells (xatol 1e-8),
    never leaving the interior grid range: the gap tends to zero at both
    support endpoints, so those limits say nothing about strictness.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    _check_domain(c, d)
    th = d.theta_max
    n = max(int(round(th / grid_step)), 2)
    grid = np.linspace(0.0, th, n + 1)[1:-1]
    gaps = split_gap(c, d, grid)
    k = int(np.argmin(gaps))
    t_best, g_best = float(grid[k]), float(gaps[k])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: float(split_gap(c, d, t)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-8})
        if res.fun < g_best:
            t_best, g_best = float(res.x), float(res.fun)
    if g_best > SPLIT_STRICT_TOL:
        cls = SplitClass.STRICTLY_SPLIT_CONVEX
    elif g_best >= -SPLIT_STRICT_TOL:
        cls = SplitClass.SPLIT_CONVEX
    else:
        cls = SplitClass.NOT_SPLIT_CONVEX
    return SplitConvexityReport(cls, t_best, g_best)


def upper_cost_derivative(c: CostFunction, d: TypeDistribution, t: float) -> float:
    """d/db c(0, b) at b = t, via the chain rule g'(mu) * dmu/db."""
    if t <= 0:
        raise DomainError(f"upper_cost_derivative needs t > 0, got {t}")
    _check_domain(c, d)
    return float(c.dg(d.mean_type(0.0, t)) * d.dmean_db(0.0, t))


def lower_cost_derivative(c: CostFunction, d: TypeDistribution, t: float) -> float:
    """d/da c(a, theta_max) at a = t."""
    if t >= d.theta_max:
        raise DomainError(f"lower_cost_derivative needs t < theta_max, got {t}")
    _check_domain(c, d)
    return float(c.dg(d.mean_type(t, d.theta_max)) * d.dmean_da(t, d.theta_max))


def mean_cost_derivative(c: CostFunction, d: TypeDistribution, a: float, b: float) -> float:
    """g'(mu(a, b)): sensitivity of the per-user cost to the mean served type."""
    return float(c.dg(d.mean_type(a, b)))


def central_difference(fun, x: float, h: float = 1e-6) -> float:
    return (fun(x + h) - fun(x - h)) / (2 * h)


def cost_from_config(spec: dict, theta_max: float = 1.0) -> CostFunction:
    """Parse ``{"provider": 1, "poly": [c0, c1, ...]}``."""
    if not isinstance(spec, dict):
        raise ValueError("cost: expected an object")
    for key in ("provider", "poly"):
        if key not in spec:
            raise ValueError(f"cost.{key}: missing")
    poly: Sequence[float] = spec["poly"]
    return CostFunction(tuple(poly), int(spec["provider"]), theta_max)


__all__ = [
    "CostFunction", "SplitClass", "SplitConvexityReport", "cost", "total_cost", "split_gap",
    "split_convexity", "upper_cost_derivative", "lower_cost_derivative", "mean_cost_derivative",
    "central_difference", "cost_from_config", "DegenerateIntervalError",
]
