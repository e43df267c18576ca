"""User type distributions on ``[0, theta_max]``.

Every distribution exposes the density, the CDF and the partial first moment
``P(t) = int_0^t theta f(theta) dtheta`` in closed form. Interval quantities
(mass, conditional mean) are derived from those three, so no quadrature is
involved anywhere in the market model.

All methods accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# inputs this close to the support bounds are clamped instead of rejected
CLAMP_TOL = 1e-12
NORMALIZATION_TOL = 1e-10


class DomainError(ValueError):
    """Argument outside the type support or an inverted interval."""


class DegenerateIntervalError(ValueError):
    """Interval carries no probability mass."""


class TypeDistribution:
    """Base class for a continuous type distribution supported on [0, theta_max]."""

    theta_max: float

    # subclasses implement the unchecked closed forms
    def _pdf(self, t):
        raise NotImplementedError

    def _cdf(self, t):
        raise NotImplementedError

    def _moment(self, t):
        raise NotImplementedError

    def _cdf_moment(self, t):
        return self._cdf(t), self._moment(t)

    def clamp(self, t):
        """Clamp values within CLAMP_TOL of the support; raise for anything further out."""
        arr = np.asarray(t, dtype=float)
        if arr.ndim == 0:
            if not -CLAMP_TOL <= arr <= self.theta_max + CLAMP_TOL:
                raise DomainError(f"type {t!r} outside support [0, {self.theta_max}]")
            return min(max(float(arr), 0.0), self.theta_max)
        if arr.size and not (arr.min() >= -CLAMP_TOL and arr.max() <= self.theta_max + CLAMP_TOL):
            raise DomainError(f"type {t!r} outside support [0, {self.theta_max}]")
        return np.clip(arr, 0.0, self.theta_max)

    def pdf(self, t):
        return self._pdf(self.clamp(t))

    def cdf(self, t):
        """F(t), exact."""
        return self._cdf(self.clamp(t))

    def partial_moment(self, t):
        """int_0^t theta f(theta) dtheta, exact."""
        return self._moment(self.clamp(t))

    def mass(self, a, b):
        """Signed probability mass F(b) - F(a)."""
        return self.cdf(b) - self.cdf(a)

    def mean_type(self, a: float, b: float) -> float:
        """Average type of the users in [a, b].

        Raises:
            DomainError: if ``a >= b`` or either bound leaves the support.
            DegenerateIntervalError: if the interval has zero mass.
        """
        a, b = self.clamp(a), self.clamp(b)
        if not a < b:
            raise DomainError(f"mean_type needs a < b, got ({a}, {b})")
        m = self._cdf(b) - self._cdf(a)
        if m <= 0.0:
            raise DegenerateIntervalError(f"interval [{a}, {b}] has zero mass")
        mu = (self._moment(b) - self._moment(a)) / m
        return float(min(max(mu, a), b))

    def interval_stats(self, a, b):
        """Vectorised (mass, mean) for intervals between ``a`` and ``b`` in either order.

        Mass is unsigned. Where the mass vanishes the mean falls back to the
        interval midpoint, which is harmless because every caller multiplies
        it by the mass.
        """
        a, b = np.asarray(self.clamp(a)), np.asarray(self.clamp(b))
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        F_lo, P_lo = self._cdf_moment(lo)
        F_hi, P_hi = self._cdf_moment(hi)
        m = F_hi - F_lo
        with np.errstate(invalid="ignore", divide="ignore"):
            mu = np.where(m > 0, (P_hi - P_lo) / np.where(m > 0, m, 1.0), 0.5 * (lo + hi))
        mu = np.clip(mu, lo, hi)
        return m, mu

    def dmean_db(self, a: float, b: float) -> float:
        """Derivative of mu(a, b) with respect to the upper bound."""
        mu = self.mean_type(a, b)
        return float(self._pdf(b) * (b - mu) / (self._cdf(b) - self._cdf(a)))

    def dmean_da(self, a: float, b: float) -> float:
        """Derivative of mu(a, b) with respect to the lower bound."""
        mu = self.mean_type(a, b)
        return float(self._pdf(a) * (mu - a) / (self._cdf(b) - self._cdf(a)))

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(TypeDistribution):
    theta_max: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.theta_max) and self.theta_max > 0):
            raise DomainError(f"theta_max must be positive, got {self.theta_max}")

    def _pdf(self, t):
        return np.ones_like(t, dtype=float) / self.theta_max if np.ndim(t) else 1.0 / self.theta_max

    def _cdf(self, t):
        return t / self.theta_max

    def _moment(self, t):
        return 0.5 * t * t / self.theta_max

    def to_config(self) -> dict:
        return {"kind": "uniform", "theta_max": float(self.theta_max)}


@dataclass(frozen=True)
class PiecewiseLinearDensity(TypeDistribution):
    """Density interpolating linearly between knots ``(theta_k, f_k)``.

    The first knot must sit at 0 and the last one defines ``theta_max``. The
    density may touch zero at isolated knots but not on a whole segment.
    """

    knots: tuple = ()
    theta_max: float = field(init=False)
    _x: np.ndarray = field(init=False, repr=False, compare=False)
    _f: np.ndarray = field(init=False, repr=False, compare=False)
    _F: np.ndarray = field(init=False, repr=False, compare=False)
    _P: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = tuple((float(x), float(y)) for x, y in self.knots)
        if len(knots) < 2:
            raise DomainError("need at least two knots")
        x = np.array([k[0] for k in knots])
        f = np.array([k[1] for k in knots])
        if x[0] != 0.0:
            raise DomainError(f"first knot must be at 0, got {x[0]}")
        if np.any(np.diff(x) <= 0):
            raise DomainError("knot positions must be strictly increasing")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise DomainError("density values must be finite and non-negative")
        if np.any((f[:-1] == 0) & (f[1:] == 0)):
            raise DomainError("density vanishes on a whole segment")
        h = np.diff(x)
        seg_mass = 0.5 * h * (f[:-1] + f[1:])
        total = seg_mass.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"density integrates to {total!r}, not 1")
        slope = (f[1:] - f[:-1]) / h
        seg_moment = x[:-1] * f[:-1] * h + (x[:-1] * slope + f[:-1]) * h**2 / 2 + slope * h**3 / 3
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "theta_max", float(x[-1]))
        object.__setattr__(self, "_x", x)
        object.__setattr__(self, "_f", f)
        object.__setattr__(self, "_F", np.concatenate([[0.0], np.cumsum(seg_mass)]))
        object.__setattr__(self, "_P", np.concatenate([[0.0], np.cumsum(seg_moment)]))

    @classmethod
    def normalized(cls, knots: Sequence[Sequence[float]]) -> "PiecewiseLinearDensity":
        """Build from unnormalised knot heights by rescaling to unit mass."""
        x = np.array([k[0] for k in knots], dtype=float)
        f = np.array([k[1] for k in knots], dtype=float)
        total = np.sum(0.5 * np.diff(x) * (f[:-1] + f[1:]))
        return cls(tuple(zip(x.tolist(), (f / total).tolist())))

    def _segment(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self._x, t, side="right") - 1, 0, len(self._x) - 2)
        x0 = self._x[k]
        f0 = self._f[k]
        slope = (self._f[k + 1] - f0) / (self._x[k + 1] - x0)
        return k, t - x0, x0, f0, slope

    def _pdf(self, t):
        _, u, _, f0, s = self._segment(t)
        out = f0 + s * u
        return float(out) if np.ndim(out) == 0 else out

    def _cdf(self, t):
        k, u, _, f0, s = self._segment(t)
        out = self._F[k] + f0 * u + s * u * u / 2
        return float(out) if np.ndim(out) == 0 else out

    def _moment(self, t):
        k, u, x0, f0, s = self._segment(t)
        out = self._P[k] + x0 * f0 * u + (x0 * s + f0) * u * u / 2 + s * u**3 / 3
        return float(out) if np.ndim(out) == 0 else out

    def _cdf_moment(self, t):
        k, u, x0, f0, s = self._segment(t)
        F = self._F[k] + f0 * u + s * u * u / 2
        P = self._P[k] + x0 * f0 * u + (x0 * s + f0) * u * u / 2 + s * u**3 / 3
        return F, P

    def to_config(self) -> dict:
        return {"kind": "piecewise", "knots": [list(k) for k in self.knots]}


def cdf(d: TypeDistribution, t: float) -> float:
    return d.cdf(t)


def mean_type(d: TypeDistribution, a: float, b: float) -> float:
    return d.mean_type(a, b)


def distribution_from_config(spec: dict) -> TypeDistribution:
    """Parse ``{"kind": "uniform", "theta_max": ...}`` or ``{"kind": "piecewise", "knots": [...]}``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("distribution: expected an object with a 'kind' field")
    kind = spec["kind"]
    if kind == "uniform":
        return Uniform(float(spec.get("theta_max", 1.0)))
    if kind == "piecewise":
        if "knots" not in spec:
            raise ValueError("distribution.knots: missing")
        return PiecewiseLinearDensity(tuple(tuple(k) for k in spec["knots"]))
    raise ValueError(f"distribution.kind: unknown kind {kind!r}")
