"""Price functions, user assignment, provider profits and welfare."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .cost import CostFunction, total_cost
from .distribution import DomainError, TypeDistribution


@dataclass(frozen=True)
class PriceFunction:
    """Per-unit payment ``p_f + p_l * theta``."""

    p_f: float
    p_l: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.p_f) and np.isfinite(self.p_l)):
            raise ValueError(f"prices must be finite, got ({self.p_f}, {self.p_l})")
        object.__setattr__(self, "p_f", float(self.p_f))
        object.__setattr__(self, "p_l", float(self.p_l))

    @property
    def conservative(self) -> bool:
        return self.p_l == 0.0

    def __call__(self, t):
        return self.p_f + self.p_l * t

    def as_tuple(self) -> tuple[float, float]:
        return (self.p_f, self.p_l)


@dataclass(frozen=True)
class UserProfile:
    """Users in [0, cutoff] join ``low_provider``; the rest join the other one."""

    cutoff: float
    low_provider: int = 1

    def __post_init__(self):
        if self.low_provider not in (1, 2):
            raise ValueError(f"low_provider must be 1 or 2, got {self.low_provider}")
        if not np.isfinite(self.cutoff) or self.cutoff < 0:
            raise DomainError(f"cutoff must be a non-negative number, got {self.cutoff}")
        object.__setattr__(self, "cutoff", float(self.cutoff))

    @property
    def high_provider(self) -> int:
        return 3 - self.low_provider

    def interval(self, provider: int, theta_max: float) -> tuple[float, float]:
        if provider == self.low_provider:
            return (0.0, self.cutoff)
        return (self.cutoff, theta_max)


class Tie:
    """Marker returned by :func:`assignment` when both price functions coincide."""

    def __repr__(self) -> str:
        return "Tie()"

    def __eq__(self, other) -> bool:
        return isinstance(other, Tie)

    def __hash__(self) -> int:
        return hash("Tie")


@dataclass(frozen=True)
class MarketOutcome:
    profit_1: float
    profit_2: float
    welfare: float

    def profit(self, provider: int) -> float:
        return self.profit_1 if provider == 1 else self.profit_2


def price_at(rho: PriceFunction, t: float) -> float:
    return rho.p_f + rho.p_l * t


def price_mass(d: TypeDistribution, rho: PriceFunction, a, b):
    """Signed revenue integral of rho over [a, b]; antisymmetric in (a, b)."""
    m, mu = d.interval_stats(a, b)
    sign = np.sign(np.asarray(b, dtype=float) - np.asarray(a, dtype=float))
    out = sign * m * (rho.p_f + rho.p_l * mu)
    return float(out) if np.ndim(out) == 0 else out


def _check_profile(sigma: UserProfile, d: TypeDistribution) -> UserProfile:
    t = d.clamp(sigma.cutoff)
    return sigma if t == sigma.cutoff else UserProfile(t, sigma.low_provider)


def assignment(rho1: PriceFunction, rho2: PriceFunction, d: TypeDistribution) -> UserProfile | Tie:
    """Utility-maximising user profile, or :class:`Tie` for identical prices.

    When slopes differ the low interval belongs to the provider with the
    steeper price line, which is the cheaper one left of the crossing.
    """
    if rho1 == rho2:
        return Tie()
    th = d.theta_max
    if rho1.p_l == rho2.p_l:
        cheaper = 1 if rho1.p_f < rho2.p_f else 2
        return UserProfile(th, cheaper)
    t_star = (rho2.p_f - rho1.p_f) / (rho1.p_l - rho2.p_l)
    low = 1 if rho1.p_l > rho2.p_l else 2
    return UserProfile(float(np.clip(t_star, 0.0, th)), low)


@dataclass(frozen=True)
class TieFamily:
    """All enforceable profiles at equal prices: any cutoff, either orientation."""

    theta_max: float

    def __contains__(self, sigma) -> bool:
        return isinstance(sigma, UserProfile) and 0.0 <= sigma.cutoff <= self.theta_max

    def grid(self, step: float) -> Iterator[UserProfile]:
        n = max(int(round(self.theta_max / step)), 1)
        for low in (1, 2):
            for t in np.linspace(0.0, self.theta_max, n + 1):
                yield UserProfile(float(t), low)


def enforceable_profiles(rho1: PriceFunction, rho2: PriceFunction, d: TypeDistribution) -> tuple | TieFamily:
    """Singleton tuple for distinct prices, otherwise the symbolic tie family."""
    sigma = assignment(rho1, rho2, d)
    if isinstance(sigma, Tie):
        return TieFamily(d.theta_max)
    return (sigma,)


def provider_profit(d: TypeDistribution, rho: PriceFunction, c: CostFunction, lo, hi):
    """Margin of a provider serving exactly [lo, hi] at prices rho (vectorised)."""
    return price_mass(d, rho, lo, hi) - total_cost(c, d, lo, hi)


def welfare(sigma: UserProfile, d: TypeDistribution, c1: CostFunction, c2: CostFunction) -> float:
    """Negative expected total serving cost under sigma; prices play no role."""
    sigma = _check_profile(sigma, d)
    costs = {1: c1, 2: c2}
    th = d.theta_max
    t = sigma.cutoff
    return -float(total_cost(costs[sigma.low_provider], d, 0.0, t) + total_cost(costs[sigma.high_provider], d, t, th))


def profits(rho1: PriceFunction, rho2: PriceFunction, sigma: UserProfile, d: TypeDistribution,
            c1: CostFunction, c2: CostFunction) -> MarketOutcome:
    """Per-customer profits of both providers and welfare under profile sigma."""
    sigma = _check_profile(sigma, d)
    rhos = {1: rho1, 2: rho2}
    costs = {1: c1, 2: c2}
    th = d.theta_max
    out = {}
    for j in (1, 2):
        lo, hi = sigma.interval(j, th)
        out[j] = float(provider_profit(d, rhos[j], costs[j], lo, hi))
    return MarketOutcome(out[1], out[2], welfare(sigma, d, c1, c2))
