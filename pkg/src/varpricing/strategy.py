"""Pricing strategies for an innovative provider facing a conservative one.

Each constructor returns a :class:`StrategyCertificate` whose premises have
been checked and whose profit guarantee has been re-verified on a cutoff
grid. A failed premise or verification raises :class:`PremiseError`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .cost import (CostFunction, SplitClass, cost, lower_cost_derivative, mean_cost_derivative,
                   split_convexity, total_cost)
from .distribution import TypeDistribution
from .market import PriceFunction, UserProfile, profits, provider_profit

VERIFY_TOL = 1e-9


class PremiseError(ValueError):
    """A hypothesis of a construction does not hold for the given scenario."""


class Guarantee(enum.Enum):
    NON_NEGATIVE_ALL_CUTOFFS = "NonNegativeAllCutoffs"
    POSITIVE_ALL_CUTOFFS = "PositiveAllCutoffs"
    BEATS_ALL_CONSTANT_BNE = "BeatsAllConstantBne"
    WEAKLY_BEATS_CONSTANT_BNE = "WeaklyBeatsConstantBne"


@dataclass(frozen=True)
class Premise:
    name: str
    passed: bool
    lhs: float
    rhs: float


@dataclass(frozen=True)
class StrategyCertificate:
    rho: PriceFunction
    guarantee: Guarantee
    premises: tuple
    worst_case_profit: float
    witness_cutoff: float
    innovator: int = 1
    t_bar: float | None = None
    epsilon: float | None = None
    notes: tuple = field(default_factory=tuple)


def _roles(c1: CostFunction, c2: CostFunction, innovator: int) -> tuple[CostFunction, CostFunction]:
    if innovator not in (1, 2):
        raise ValueError(f"innovator must be 1 or 2, got {innovator}")
    return (c1, c2) if innovator == 1 else (c2, c1)


def _require(premises: list[Premise]) -> None:
    failed = [p for p in premises if not p.passed]
    if failed:
        p = failed[0]
        raise PremiseError(f"premise failed: {p.name} (lhs={p.lhs:.9g}, rhs={p.rhs:.9g})")


def _cutoffs(d: TypeDistribution, grid_step: float, include_zero: bool = False, include_max: bool = True):
    n = max(int(round(d.theta_max / grid_step)), 2)
    grid = np.linspace(0.0, d.theta_max, n + 1)
    if not include_zero:
        grid = grid[1:]
    if not include_max:
        grid = grid[:-1]
    return grid


@dataclass(frozen=True)
class ExistenceReport:
    exists: bool
    witness: float | None
    max_gap: float


def _existence_gap(d, c_own, c_other, t):
    th = d.theta_max
    whole_own = total_cost(c_own, d, 0.0, th)
    whole_other = total_cost(c_other, d, 0.0, th)
    F = d.cdf(t)
    return whole_own - total_cost(c_own, d, 0.0, t) - (1 - F) * (whole_own - whole_other)


def one_innovative_bne_exists(d: TypeDistribution, c1: CostFunction, c2: CostFunction,
                              innovator: int = 1, grid_step: float = 1e-3) -> ExistenceReport:
    """Scan cutoffs in [0, theta_max) for a witness that rules out any equilibrium.

    ``theta_max`` itself is excluded because both sides of the inequality
    vanish there for every scenario.
    """
    c_own, c_other = _roles(c1, c2, innovator)
    grid = _cutoffs(d, grid_step, include_zero=True, include_max=False)
    gaps = _existence_gap(d, c_own, c_other, grid)
    hits = np.nonzero(gaps >= 0)[0]
    if hits.size:
        return ExistenceReport(False, float(grid[hits[0]]), float(gaps.max()))
    k = int(np.argmax(gaps))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda t: -float(_existence_gap(d, c_own, c_other, t)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-10})
    if -res.fun >= 0:
        return ExistenceReport(False, float(res.x), float(-res.fun))
    return ExistenceReport(True, None, float(max(gaps.max(), -res.fun)))


def _low_interval_profits(d, rho, c_own, cutoffs):
    return provider_profit(d, rho, c_own, np.zeros_like(cutoffs), cutoffs)


def positive_profit_strategy(d: TypeDistribution, c1: CostFunction, c2: CostFunction, t_bar: float,
                             innovator: int = 1, grid_step: float = 1e-3) -> StrategyCertificate:
    """Price at the innovator's own cost of serving [0, t_bar], slope chosen to recoup it."""
    c_own, c_other = _roles(c1, c2, innovator)
    th = d.theta_max
    if not 0.0 < t_bar < th:
        raise PremiseError(f"premise failed: 0 < t_bar < theta_max (t_bar={t_bar})")
    low = cost(c_own, d, 0.0, t_bar)
    whole_own = cost(c_own, d, 0.0, th)
    whole_other = cost(c_other, d, 0.0, th)
    premises = [
        Premise("c_own(0,t_bar) < c_other(0,theta_max)", low < whole_other, low, whole_other),
        Premise("c_own(0,t_bar) < c_own(0,theta_max)", low < whole_own, low, whole_own),
        Premise("c_own(0,theta_max) < 2 c_own(0,t_bar)", whole_own < 2 * low, whole_own, 2 * low),
    ]
    _require(premises)
    rho = PriceFunction(low, low / d.partial_moment(t_bar))
    grid = _cutoffs(d, grid_step)
    pis = _low_interval_profits(d, rho, c_own, grid)
    k = int(np.argmin(pis))
    if not pis[k] > 0:
        raise PremiseError(f"verification failed: profit {pis[k]:.3g} at cutoff {grid[k]:.6g}")
    return StrategyCertificate(rho, Guarantee.POSITIVE_ALL_CUTOFFS, tuple(premises), float(pis[k]),
                               float(grid[k]), innovator, t_bar=t_bar)


def best_t_bar(d: TypeDistribution, c1: CostFunction, c2: CostFunction, innovator: int = 1,
               grid_step: float = 1e-2, verify_step: float = 1e-3) -> StrategyCertificate:
    """Among premise-satisfying t_bar on a grid, pick the one with the best worst-case profit."""
    best = None
    for t in _cutoffs(d, grid_step, include_max=False):
        try:
            cert = positive_profit_strategy(d, c1, c2, float(t), innovator, verify_step)
        except PremiseError:
            continue
        if best is None or cert.worst_case_profit > best.worst_case_profit:
            best = cert
    if best is None:
        raise PremiseError("no t_bar on the grid satisfies the premises")
    return best


def _upper_quotient(d, c_other, t):
    th = d.theta_max
    whole = total_cost(c_other, d, 0.0, th)
    m, mu = d.interval_stats(t, th)
    # c(t, theta_max) tends to g(theta_max) as t -> theta_max
    c_t = np.where(m > 0, c_other.g(mu), c_other.g(th))
    return (c_t - whole) / t


def dominant_strategy(d: TypeDistribution, c1: CostFunction, c2: CostFunction, epsilon: float | None = None,
                      innovator: int = 1, grid_step: float = 1e-3) -> StrategyCertificate:
    """Undercut the rival's whole-market cost while charging high types at its marginal cost rate.

    The slope is the smallest difference quotient (c(t, theta_max) - c(0, theta_max)) / t;
    its limit t -> 0 is included explicitly and reported through ``t_bar = 0``.
    """
    c_own, c_other = _roles(c1, c2, innovator)
    th = d.theta_max
    whole_own = cost(c_own, d, 0.0, th)
    whole_other = cost(c_other, d, 0.0, th)
    premises = [Premise("c_own(0,theta_max) < c_other(0,theta_max)", whole_own < whole_other,
                        whole_own, whole_other)]
    _require(premises)

    grid = _cutoffs(d, grid_step)
    q = _upper_quotient(d, c_other, grid)
    k = int(np.argmin(q))
    t_bar, slope = float(grid[k]), float(q[k])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda t: float(_upper_quotient(d, c_other, t)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    if res.fun < slope:
        t_bar, slope = float(res.x), float(res.fun)
    notes = []
    limit = lower_cost_derivative(c_other, d, 0.0)
    if limit <= slope:
        t_bar, slope = 0.0, limit
        notes.append("slope attained as the t -> 0 limit of the difference quotient")

    mu = d.mean_type(0.0, th)
    bound = mu * slope
    if epsilon is None:
        epsilon = bound / 2
    premises.append(Premise("0 < epsilon < mu(0,theta_max) * p_l", 0.0 < epsilon < bound, epsilon, bound))
    premises.append(Premise("p_l > 0", slope > 0, slope, 0.0))
    _require(premises)
    rho = PriceFunction(whole_other - epsilon, slope)

    # any constant response that attracts users gets [t, theta_max] with t on this grid
    cut = _cutoffs(d, grid_step, include_zero=True, include_max=False)
    other_pi = (1 - d.cdf(cut)) * rho(cut) - total_cost(c_other, d, cut, th)
    bound_pi = -(1 - d.cdf(cut)) * epsilon + VERIFY_TOL
    bad = np.nonzero(other_pi > bound_pi)[0]
    if bad.size:
        j = bad[0]
        raise PremiseError(f"verification failed: rival profit {other_pi[j]:.3g} at cutoff {cut[j]:.6g}")
    own_pi = profits(rho, rho, UserProfile(th, innovator), d, *((c_own, c_other) if innovator == 1 else (c_other, c_own)))
    own_whole = own_pi.profit(innovator)
    if not own_whole > whole_other - whole_own:
        raise PremiseError("verification failed: whole-market profit does not beat the constant equilibrium")
    return StrategyCertificate(rho, Guarantee.BEATS_ALL_CONSTANT_BNE, tuple(premises), own_whole, th,
                               innovator, t_bar=t_bar, epsilon=epsilon, notes=tuple(notes))


def profit_preserving_strategy(d: TypeDistribution, c1: CostFunction, c2: CostFunction, innovator: int = 1,
                               grid_step: float = 1e-3) -> StrategyCertificate:
    """Price along the tangent of the rival's cost in mean type at the whole market.

    Matching the rival's price line means any split of the market leaves the
    rival with a loss, so its individually rational responses hand the
    innovator the whole market at the rival's cost.
    """
    c_own, c_other = _roles(c1, c2, innovator)
    th = d.theta_max
    report = split_convexity(c_other, d, grid_step)
    premises = [Premise("c_other strictly split-convex",
                        report.cls is SplitClass.STRICTLY_SPLIT_CONVEX, report.worst_gap, 0.0)]
    _require(premises)
    mu = d.mean_type(0.0, th)
    whole_other = cost(c_other, d, 0.0, th)
    whole_own = cost(c_own, d, 0.0, th)
    slope = mean_cost_derivative(c_other, d, 0.0, th)
    rho = PriceFunction(whole_other - slope * mu, slope)

    cut = _cutoffs(d, grid_step, include_max=False)
    full = np.full_like(cut, th)
    worst = -np.inf
    worst_t = float("nan")
    for lo, hi in ((np.zeros_like(cut), cut), (cut, full)):
        pi = provider_profit(d, rho, c_other, lo, hi)
        j = int(np.argmax(pi))
        if pi[j] > worst:
            worst, worst_t = float(pi[j]), float(cut[j])
    if not worst < 0:
        raise PremiseError(f"verification failed: rival profit {worst:.3g} at cutoff {worst_t:.6g}")

    notes = []
    if whole_own >= whole_other:
        notes.append("own constant-equilibrium profit is zero; the guarantee holds trivially")
        guaranteed = 0.0
    else:
        guaranteed = whole_other - whole_own
    return StrategyCertificate(rho, Guarantee.WEAKLY_BEATS_CONSTANT_BNE, tuple(premises), guaranteed, worst_t,
                               innovator, notes=tuple(notes))


@dataclass(frozen=True)
class SymmetricReport:
    split: object
    zero_profit_required: bool
    d: TypeDistribution = field(repr=False)
    c: CostFunction = field(repr=False)

    def equal_profit_gap_at(self, rho: PriceFunction, sigma: UserProfile) -> float:
        out = profits(rho, rho, sigma, self.d, self.c.relabel(1), self.c.relabel(2))
        return abs(out.profit_1 - out.profit_2)


def symmetric_diagnostics(d: TypeDistribution, c: CostFunction, grid_step: float = 1e-3) -> SymmetricReport:
    """Both providers share ``c``: split-convexity forces zero profits, otherwise profits must still match."""
    report = split_convexity(c, d, grid_step)
    return SymmetricReport(report, report.cls.at_least(SplitClass.SPLIT_CONVEX), d, c)
