"""Brute-force verification on a discretised strategy space.

Nothing here uses the equilibrium characterisation; profits are evaluated
directly for every grid strategy with the utility-maximising assignment. At
exactly equal prices the deviator gets its best enforceable profile, since
it can secure that profile at an arbitrarily small loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cost import CostFunction, total_cost
from .distribution import TypeDistribution
from .market import PriceFunction, Tie, UserProfile, assignment, profits

TIE_STEP = 1e-3


@dataclass(frozen=True)
class DeviationGrid:
    p_f_range: tuple[float, float]
    p_l_range: tuple[float, float]
    steps: int = 201

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError("steps must be at least 2")
        for lo, hi in (self.p_f_range, self.p_l_range):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"invalid grid range ({lo}, {hi})")

    @classmethod
    def default(cls, d: TypeDistribution, c1: CostFunction, c2: CostFunction, steps: int = 201) -> "DeviationGrid":
        th = d.theta_max
        scale = max(float(total_cost(c1, d, 0.0, th)), float(total_cost(c2, d, 0.0, th)))
        return cls((-0.5 * scale, 1.5 * scale), (-1.0 * scale / th, 3.0 * scale / th), steps)

    def p_f_values(self) -> np.ndarray:
        return _snap(np.linspace(*self.p_f_range, self.steps))

    def exit_price(self, theta_max: float) -> float:
        """A constant price above every grid price function on the whole support."""
        hi = max(abs(self.p_f_range[0]), abs(self.p_f_range[1]))
        return hi + max(abs(self.p_l_range[0]), abs(self.p_l_range[1])) * theta_max + 1.0

    def p_l_values(self, constant_only: bool = False) -> np.ndarray:
        if constant_only:
            return np.zeros(1)
        return _snap(np.linspace(*self.p_l_range, self.steps))


def _snap(x: np.ndarray) -> np.ndarray:
    # linspace lands a hair off zero; exact zeros keep constant strategies constant
    scale = max(abs(x[0]), abs(x[-1]))
    x = x.copy()
    x[np.abs(x) < 1e-12 * scale] = 0.0
    return x


@dataclass(frozen=True)
class BestResponse:
    rho: PriceFunction
    profit: float
    induced_profile: UserProfile


@dataclass(frozen=True)
class Deviation:
    provider: int
    rho: PriceFunction
    gain: float


@dataclass(frozen=True)
class EpsilonReport:
    certified: bool
    best_deviation: Deviation | None
    gains: tuple[float, float]


def own_interval(d: TypeDistribution, pf, pl, rho_other: PriceFunction):
    """Interval [lo, hi] of types strictly preferring (pf, pl) to rho_other, vectorised.

    Exact ties (identical prices) come back as an empty interval and are
    flagged in the third return value.
    """
    th = d.theta_max
    pf, pl = np.broadcast_arrays(np.asarray(pf, dtype=float), np.asarray(pl, dtype=float))
    df = pf - rho_other.p_f
    dl = pl - rho_other.p_l
    with np.errstate(divide="ignore", invalid="ignore"):
        t_star = np.clip(np.where(dl != 0, -df / np.where(dl != 0, dl, 1.0), 0.0), 0.0, th)
    lo = np.where(dl < 0, t_star, 0.0)
    hi = np.where(dl > 0, t_star, np.where(dl < 0, th, np.where(df < 0, th, 0.0)))
    tie = (df == 0) & (dl == 0)
    return lo, hi, tie


def tie_profit(d: TypeDistribution, c_self: CostFunction, rho: PriceFunction, step: float = TIE_STEP,
               constant_only: bool = False):
    """Best own profit over the profiles a deviator can enforce at a common price.

    A deviator with a free slope can tilt its price to carve out any cutoff in
    either orientation. A constant-only deviator can only undercut or
    overprice, so it gets the whole market or nobody. Returns
    ``(profit, lo, hi)`` for the chosen own interval.
    """
    th = d.theta_max
    if constant_only:
        t = np.array([0.0, th])
    else:
        t = np.linspace(0.0, th, max(int(round(th / step)), 1) + 1)
    lo = np.concatenate([np.zeros_like(t), t])
    hi = np.concatenate([t, np.full_like(t, th)])
    m, mu = d.interval_stats(lo, hi)
    pi = np.where(m > 0, m * (rho.p_f + rho.p_l * mu) - total_cost(c_self, d, lo, hi), 0.0)
    j = int(np.argmax(pi))
    return float(pi[j]), float(lo[j]), float(hi[j])


def deviation_profits(d: TypeDistribution, c_self: CostFunction, rho_other: PriceFunction, pf, pl,
                      tie_step: float = TIE_STEP, constant_only: bool = False) -> np.ndarray:
    """Own profit for every (pf, pl) against a fixed opponent price function."""
    lo, hi, tie = own_interval(d, pf, pl, rho_other)
    m, mu = d.interval_stats(lo, hi)
    pi = m * (pf + pl * mu) - total_cost(c_self, d, lo, hi)
    pi = np.where(m > 0, pi, 0.0)
    if np.any(tie):
        pi = np.where(tie, tie_profit(d, c_self, rho_other, tie_step, constant_only)[0], pi)
    return pi


def _profile_for(provider: int, lo: float, hi: float, th: float) -> UserProfile:
    if hi <= lo:
        # serves nobody: the rival takes everything
        return UserProfile(0.0, provider)
    if lo == 0.0:
        return UserProfile(hi, provider)
    return UserProfile(lo, 3 - provider)


def best_response(d: TypeDistribution, c_self: CostFunction, c_other: CostFunction, rho_other: PriceFunction,
                  grid: DeviationGrid, constant_only: bool = False, provider: int = 1,
                  tie_step: float = TIE_STEP) -> BestResponse:
    """Exhaustive grid best response; ties broken towards the lowest p_f, then the lowest p_l.

    Matching the opponent's price exactly (with the deviator-optimal profile)
    and exiting the market (a price nobody accepts, profit 0) are always
    available; each is returned only when it strictly beats the grid.
    """
    PF, PL = np.meshgrid(grid.p_f_values(), grid.p_l_values(constant_only), indexing="ij")
    pi = deviation_profits(d, c_self, rho_other, PF, PL, tie_step, constant_only)
    j = int(np.argmax(pi))
    if not constant_only or rho_other.p_l == 0.0:
        match, m_lo, m_hi = tie_profit(d, c_self, rho_other, tie_step, constant_only)
        if match > pi.flat[j] and match >= 0.0:
            return BestResponse(rho_other, match, _profile_for(provider, m_lo, m_hi, d.theta_max))
    if pi.flat[j] < 0.0:
        # attracting nobody beats every grid price
        exit_rho = PriceFunction(max(rho_other(0.0), rho_other(d.theta_max)) + 1.0, 0.0)
        return BestResponse(exit_rho, 0.0, UserProfile(0.0, provider))
    rho = PriceFunction(float(PF.flat[j]), float(PL.flat[j]))
    if rho == rho_other:
        _, lo, hi = tie_profit(d, c_self, rho_other, tie_step, constant_only)
    else:
        lo, hi, _ = (float(v) for v in own_interval(d, rho.p_f, rho.p_l, rho_other))
    return BestResponse(rho, float(pi.flat[j]), _profile_for(provider, lo, hi, d.theta_max))


def epsilon_bne_verify(d: TypeDistribution, c1: CostFunction, c2: CostFunction, rho1: PriceFunction,
                       rho2: PriceFunction, sigma: UserProfile, epsilon: float, grid: DeviationGrid,
                       constant_only: tuple[bool, bool] = (False, False)) -> EpsilonReport:
    """Certified iff neither provider's grid best response gains more than epsilon."""
    current = profits(rho1, rho2, sigma, d, c1, c2)
    costs = {1: c1, 2: c2}
    rhos = {1: rho1, 2: rho2}
    best = None
    gains = []
    for i in (1, 2):
        br = best_response(d, costs[i], costs[3 - i], rhos[3 - i], grid, constant_only[i - 1], provider=i)
        gain = br.profit - current.profit(i)
        gains.append(gain)
        if best is None or gain > best.gain:
            best = Deviation(i, br.rho, gain)
    certified = all(g <= epsilon for g in gains)
    return EpsilonReport(certified, None if certified else best, (gains[0], gains[1]))


@dataclass(frozen=True)
class SweepRow:
    p_f: float
    profit_1: float
    profit_2: float
    welfare: float
    cutoff: float
    low_provider: int


def response_sweep(d: TypeDistribution, c1: CostFunction, c2: CostFunction, rho_innovator: PriceFunction,
                   innovator: int, p_f_samples: Sequence[float]) -> list[SweepRow]:
    """Profits and welfare for each constant response of the conservative provider."""
    responder = 3 - innovator
    costs = {1: c1, 2: c2}
    rows = []
    for p in p_f_samples:
        rho_resp = PriceFunction(float(p), 0.0)
        rhos = {innovator: rho_innovator, responder: rho_resp}
        sigma = assignment(rhos[1], rhos[2], d)
        if isinstance(sigma, Tie):
            _, lo, hi = tie_profit(d, costs[responder], rho_innovator, constant_only=True)
            sigma = _profile_for(responder, lo, hi, d.theta_max)
        out = profits(rhos[1], rhos[2], sigma, d, c1, c2)
        rows.append(SweepRow(float(p), out.profit_1, out.profit_2, out.welfare, sigma.cutoff, sigma.low_provider))
    return rows


def cutoff_sweep(d: TypeDistribution, c1: CostFunction, c2: CostFunction, rho: PriceFunction, low_provider: int,
                 cutoffs: Sequence[float]) -> list[SweepRow]:
    """Profits at a common price for each profile [0, t] -> low_provider."""
    rows = []
    for t in cutoffs:
        out = profits(rho, rho, UserProfile(float(t), low_provider), d, c1, c2)
        rows.append(SweepRow(rho.p_f, out.profit_1, out.profit_2, out.welfare, float(t), low_provider))
    return rows


def _tie_table(d: TypeDistribution, c1: CostFunction, c2: CostFunction, rho: PriceFunction, step: float):
    """Both providers' profits at a common price for every enforceable profile on a cutoff grid."""
    th = d.theta_max
    t = np.linspace(0.0, th, max(int(round(th / step)), 1) + 1)
    zero, top = np.zeros_like(t), np.full_like(t, th)
    m_lo, mu_lo = d.interval_stats(zero, t)
    m_hi, mu_hi = d.interval_stats(t, top)
    rev_lo = m_lo * (rho.p_f + rho.p_l * mu_lo)
    rev_hi = m_hi * (rho.p_f + rho.p_l * mu_hi)
    # orientation 1 first ([0, t] -> 1), then orientation 2
    p1 = np.concatenate([rev_lo - total_cost(c1, d, zero, t), rev_hi - total_cost(c1, d, t, top)])
    p2 = np.concatenate([rev_hi - total_cost(c2, d, t, top), rev_lo - total_cost(c2, d, zero, t)])
    low = np.concatenate([np.ones(t.size, dtype=int), np.full(t.size, 2)])
    return p1, p2, np.concatenate([t, t]), low


@dataclass(frozen=True)
class EpsilonBne:
    rho1: PriceFunction
    rho2: PriceFunction
    sigma: UserProfile | None


def _pair_profits(d: TypeDistribution, c_var: CostFunction, c_fixed: CostFunction, rho_fixed: PriceFunction,
                  f: np.ndarray, l: np.ndarray):
    """Profits of both sides when one provider plays each of (f, l) against a fixed price function."""
    th = d.theta_max
    lo, hi, tie = own_interval(d, f, l, rho_fixed)
    m, mu = d.interval_stats(lo, hi)
    pi_var = np.where(m > 0, m * (f + l * mu) - total_cost(c_var, d, lo, hi), 0.0)
    # the fixed provider serves the complement
    lo2 = np.where(lo > 0, 0.0, hi)
    hi2 = np.where(lo > 0, lo, th)
    m2, mu2 = d.interval_stats(lo2, hi2)
    pi_fixed = np.where(m2 > 0, m2 * (rho_fixed.p_f + rho_fixed.p_l * mu2) - total_cost(c_fixed, d, lo2, hi2), 0.0)
    return pi_var, pi_fixed, tie


def search_epsilon_bne(d: TypeDistribution, c1: CostFunction, c2: CostFunction, grid: DeviationGrid,
                       epsilon: float, constant_only: tuple[bool, bool] = (False, True),
                       tie_step: float = TIE_STEP, limit: int = 10) -> list[EpsilonBne]:
    """Enumerate strategy pairs on the grid and return (up to ``limit``) epsilon-equilibria.

    Both providers share the p_f axis, so a constant strategy of one provider
    coincides exactly with the matching grid point of the other and ties are
    detected. Each strategy set also contains the exit price, high enough to
    attract nobody. At ties every enforceable profile on a ``tie_step`` cutoff
    grid is tried.
    """
    pf = grid.p_f_values()
    exit_price = grid.exit_price(d.theta_max)
    S = []
    for i in (1, 2):
        PF, PL = np.meshgrid(pf, grid.p_l_values(constant_only[i - 1]), indexing="ij")
        S.append((np.append(PF.ravel(), exit_price), np.append(PL.ravel(), 0.0)))
    (f1, l1), (f2, l2) = S
    pi1 = np.empty((len(f1), len(f2)))
    pi2 = np.empty_like(pi1)
    if len(f2) <= len(f1):
        for j in range(len(f2)):
            a, b, tie = _pair_profits(d, c1, c2, PriceFunction(f2[j], l2[j]), f1, l1)
            pi1[:, j], pi2[:, j] = np.where(tie, np.nan, a), np.where(tie, np.nan, b)
    else:
        for i in range(len(f1)):
            b, a, tie = _pair_profits(d, c2, c1, PriceFunction(f1[i], l1[i]), f2, l2)
            pi1[i, :], pi2[i, :] = np.where(tie, np.nan, a), np.where(tie, np.nan, b)
    tie_mask = np.isnan(pi1)
    ties = {}
    for i, j in zip(*np.nonzero(tie_mask)):
        ties[i, j] = _tie_table(d, c1, c2, PriceFunction(f1[i], l1[i]), tie_step)
    br1 = np.nanmax(pi1, axis=0)
    br2 = np.nanmax(pi2, axis=1)
    for (i, j) in ties:
        rho = PriceFunction(f1[i], l1[i])
        br1[j] = max(br1[j], tie_profit(d, c1, rho, tie_step, constant_only[0])[0])
        br2[i] = max(br2[i], tie_profit(d, c2, rho, tie_step, constant_only[1])[0])
    found: list[EpsilonBne] = []
    with np.errstate(invalid="ignore"):
        ok = (pi1 >= br1[None, :] - epsilon) & (pi2 >= br2[:, None] - epsilon)
    for i, j in zip(*np.nonzero(ok)):
        found.append(EpsilonBne(PriceFunction(f1[i], l1[i]), PriceFunction(f2[j], l2[j]), None))
        if len(found) >= limit:
            return found
    for (i, j), (p1, p2, cut, low) in ties.items():
        rho = PriceFunction(f1[i], l1[i])
        for k in np.nonzero((p1 >= br1[j] - epsilon) & (p2 >= br2[i] - epsilon))[0]:
            found.append(EpsilonBne(rho, rho, UserProfile(float(cut[k]), int(low[k]))))
            if len(found) >= limit:
                return found
    return found
