"""Equilibria when both providers charge constant per-unit prices."""

from __future__ import annotations

from dataclasses import dataclass

from .cost import CostFunction, cost
from .distribution import TypeDistribution
from .market import PriceFunction, UserProfile


@dataclass(frozen=True)
class ConstantBneSet:
    """Common constant prices ``p`` in ``price_interval`` with the winner serving everyone.

    ``winners`` holds both labels when whole-market costs coincide, since then
    either provider may take the market at the canonical price.
    """

    low_cost_provider: int
    price_interval: tuple[float, float]
    canonical_price: float
    winner_cost: float
    winners: tuple[int, ...]

    def winner_profit_at(self, p: float) -> float:
        return p - self.winner_cost

    def loser_profit_at(self, p: float) -> float:
        return 0.0

    def profile(self, winner: int | None = None) -> UserProfile:
        # whole market to the winner; theta_max is filled in by callers that need it
        return UserProfile(0.0, 3 - (winner or self.low_cost_provider))

    @property
    def canonical_rho(self) -> PriceFunction:
        return PriceFunction(self.canonical_price, 0.0)

    def contains(self, p: float, tol: float = 1e-12) -> bool:
        lo, hi = self.price_interval
        return lo - tol <= p <= hi + tol


def constant_bne_set(d: TypeDistribution, c1: CostFunction, c2: CostFunction) -> ConstantBneSet:
    th = d.theta_max
    w1, w2 = cost(c1, d, 0.0, th), cost(c2, d, 0.0, th)
    low = 1 if w1 <= w2 else 2
    lo, hi = min(w1, w2), max(w1, w2)
    winners = (1, 2) if w1 == w2 else (low,)
    return ConstantBneSet(low, (lo, hi), hi, lo, winners)


def constant_bne_welfare(d: TypeDistribution, c1: CostFunction, c2: CostFunction) -> float:
    th = d.theta_max
    return -min(cost(c1, d, 0.0, th), cost(c2, d, 0.0, th))
