"""Equilibria when both providers may price linearly in the user type.

A common price ``rho`` together with a cutoff profile ``[0, t]->i`` is an
equilibrium iff no provider gains by enforcing another cutoff profile at the
same prices. For a fixed alternative cutoff ``a`` every such condition is
linear in ``(p_f, p_l)``::

    alpha(a) * p_f + beta(a) * p_l + gamma(a) >= 0

which :func:`condition_terms` returns for four deviation families:

``low_keeps``       the low provider moves the cutoff to ``a``
``high_keeps``      the high provider moves the cutoff to ``a``
``high_takes_low``  the high provider grabs ``[0, a]`` instead
``low_takes_high``  the low provider grabs ``[a, theta_max]`` instead

The continuum of ``a`` is handled by a grid plus bounded local refinement of
each condition's minimum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .cost import CostFunction, total_cost
from .distribution import TypeDistribution
from .market import MarketOutcome, PriceFunction, UserProfile, profits

log = logging.getLogger(__name__)

CONDITIONS = ("low_keeps", "high_keeps", "high_takes_low", "low_takes_high")
CHECK_TOL = 1e-6
SEGMENT_TOL = 1e-10
REFINE_XATOL = 1e-8
ROOT_XTOL = 1e-13
MAX_CUTS = 50
# unbounded price ranges are clipped to this multiple of the largest whole-market cost
BOX = 100.0
# iteration cap for the exact polygon projection
PROJECT_ITER = 64
# tangency gap this small on the whole grid counts as identically zero
FLAT_TOL = 1e-12


@dataclass(frozen=True)
class BneStatus:
    """Outcome of :func:`check_bne`; ``gap`` is the smallest slack found (negative = gain)."""

    verified: bool
    condition: str | None
    worst_a: float
    gap: float
    tol: float

    def __bool__(self) -> bool:
        return self.verified


@dataclass(frozen=True)
class Candidate:
    cutoff: float
    low_provider: int
    price_line_target: float | None
    boundary: bool = False
    flag: str | None = None

    @property
    def profile(self) -> UserProfile:
        return UserProfile(self.cutoff, self.low_provider)


@dataclass(frozen=True)
class Segment:
    """Verified common prices for one candidate profile.

    ``p_f_range`` respects the price floor (if any); ``unrestricted_p_f_range``
    is the same set without it. Both are None when empty.
    """

    p_f_range: tuple[float, float] | None
    unrestricted_p_f_range: tuple[float, float] | None
    witness: PriceFunction | None
    tol: float
    notes: tuple = ()

    @property
    def empty(self) -> bool:
        return self.p_f_range is None


@dataclass(frozen=True)
class BneCandidate:
    rho: PriceFunction
    profile: UserProfile
    price_line_target: float | None
    status: BneStatus
    p_f_range: tuple[float, float] | None = None
    unrestricted_p_f_range: tuple[float, float] | None = None
    outcome: MarketOutcome | None = None
    notes: tuple = field(default_factory=tuple)

    def on_price_line(self, tol: float = 1e-9) -> bool:
        if self.price_line_target is None:
            return True
        return abs(self.rho(self.profile.cutoff) - self.price_line_target) <= tol


def _costs(c1, c2, low):
    return (c1, c2) if low == 1 else (c2, c1)


def condition_terms(d: TypeDistribution, c1: CostFunction, c2: CostFunction, cutoff: float, low: int, a):
    """Coefficients (alpha, beta, gamma), each of shape (4, len(a)), in CONDITIONS order."""
    c_low, c_high = _costs(c1, c2, low)
    th = d.theta_max
    a = np.atleast_1d(np.asarray(d.clamp(a), dtype=float))
    t = d.clamp(cutoff)
    n = a.size
    # one batched evaluation: [0, a], [a, th], then the fixed intervals [0, t] and [t, th]
    lo = np.concatenate([np.zeros(n), a, [0.0, t]])
    hi = np.concatenate([a, np.full(n, th), [t, th]])
    m, mu = d.interval_stats(lo, hi)
    Fa, Ft = m[:n], m[-2]
    Fth = Ft + m[-1]
    Pa = np.where(m[:n] > 0, m[:n] * mu[:n], 0.0)
    Pt = m[-2] * mu[-2] if m[-2] > 0 else 0.0
    Pth = Pt + (m[-1] * mu[-1] if m[-1] > 0 else 0.0)
    g_low, g_high = c_low.g(mu), c_high.g(mu)
    low_t = m[-2] * g_low[-2] if m[-2] > 0 else 0.0
    high_t = m[-1] * g_high[-1] if m[-1] > 0 else 0.0
    m_lo, m_hi = m[:n], m[n:2 * n]
    low_a = np.where(m_lo > 0, m_lo * g_low[:n], 0.0)
    high_as_low = np.where(m_lo > 0, m_lo * g_high[:n], 0.0)
    high_a = np.where(m_hi > 0, m_hi * g_high[n:2 * n], 0.0)
    low_as_high = np.where(m_hi > 0, m_hi * g_low[n:2 * n], 0.0)
    one = np.ones_like(a)
    alpha = np.stack([Ft - Fa, Fa - Ft, (Fth - Ft - Fa) * one, (Ft - Fth + Fa) * one])
    beta = np.stack([Pt - Pa, Pa - Pt, (Pth - Pt - Pa) * one, (Pt - Pth + Pa) * one])
    gamma = np.stack([low_a - low_t, high_a - high_t, high_as_low - high_t, low_as_high - low_t])
    return alpha, beta, gamma


def condition_gaps(d, c1, c2, rho: PriceFunction, profile: UserProfile, a):
    alpha, beta, gamma = condition_terms(d, c1, c2, profile.cutoff, profile.low_provider, a)
    return alpha * rho.p_f + beta * rho.p_l + gamma


def _grid(d: TypeDistribution, step: float) -> np.ndarray:
    n = max(int(round(d.theta_max / step)), 2)
    return np.linspace(0.0, d.theta_max, n + 1)


def _zoom_min(fun, lo, hi, xatol: float = REFINE_XATOL, points: int = 201):
    """Minimise row k of a vectorised function inside window [lo[k], hi[k]], all rows at once.

    ``fun`` maps a flat array of points to an array with one row per window.
    Each round evaluates every window on a uniform grid and zooms to the
    neighbourhood of its best point. Returns (argmin, min) arrays.
    """
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    n = lo.size
    rows = np.arange(n)
    best_x, best_f = lo.copy(), np.full(n, np.inf)
    u = np.linspace(0.0, 1.0, points)
    while True:
        x = lo[:, None] + (hi - lo)[:, None] * u
        y = fun(x.ravel()).reshape(n, n, points)[rows, rows]
        j = np.argmin(y, axis=1)
        yj, xj = y[rows, j], x[rows, j]
        better = yj < best_f
        best_x[better], best_f[better] = xj[better], yj[better]
        h = (hi - lo) / (points - 1)
        if np.all(h <= xatol):
            return best_x, best_f
        lo, hi = np.maximum(lo, xj - h), np.minimum(hi, xj + h)


def check_bne(d: TypeDistribution, c1: CostFunction, c2: CostFunction, rho: PriceFunction, profile: UserProfile,
              grid_step: float = 1e-3, tol: float = CHECK_TOL, refine: bool = True) -> BneStatus:
    """Certify (rho, rho, profile) as an equilibrium up to grid resolution.

    Returns the first condition (in CONDITIONS order) whose slack drops below
    ``-tol``, or a verified status carrying the overall minimum slack.
    """
    a = _grid(d, grid_step)
    gaps = condition_gaps(d, c1, c2, rho, profile, a)
    j = np.argmin(gaps, axis=1)
    worst_a, worst = a[j], gaps[np.arange(len(CONDITIONS)), j]
    if refine:
        lo, hi = a[np.maximum(j - 1, 0)], a[np.minimum(j + 1, len(a) - 1)]
        x, y = _zoom_min(lambda x: condition_gaps(d, c1, c2, rho, profile, x), lo, hi)
        better = y < worst
        worst_a, worst = np.where(better, x, worst_a), np.where(better, y, worst)
    for k, name in enumerate(CONDITIONS):
        if worst[k] < -tol:
            return BneStatus(False, name, float(worst_a[k]), float(worst[k]), tol)
    k = int(np.argmin(worst))
    return BneStatus(True, None, float(worst_a[k]), float(worst[k]), tol)


def _tangent(c: CostFunction, mu, t):
    return c.g(mu) + c.dg(mu) * (t - mu)


def tangency_gap(d: TypeDistribution, c1: CostFunction, c2: CostFunction, low: int, t):
    """Difference of the two outer derivatives in the first-order condition, divided by f(t).

    d/dt F(t) c_low(0,t) = f(t) * tangent of g_low at mu(0,t), evaluated at t,
    and likewise for -(1-F(t)) c_high(t,theta_max), so the density cancels.
    """
    c_low, c_high = _costs(c1, c2, low)
    _, mu_lo = d.interval_stats(0.0, t)
    _, mu_hi = d.interval_stats(t, d.theta_max)
    return _tangent(c_low, mu_lo, t) - _tangent(c_high, mu_hi, t)


def price_line_target(d: TypeDistribution, c1: CostFunction, c2: CostFunction, low: int, t: float) -> float:
    """Common payment rho(t) forced at an interior equilibrium cutoff t."""
    c_low, _ = _costs(c1, c2, low)
    _, mu = d.interval_stats(0.0, t)
    return float(_tangent(c_low, mu, t))


def candidate_cutoffs(d: TypeDistribution, c1: CostFunction, c2: CostFunction,
                      grid_step: float = 1e-3) -> list[Candidate]:
    """Interior roots of the first-order condition for both orientations, plus the two whole-market profiles.

    Roots are bracketed by sign changes on the grid, so tangential double roots
    are not detected. When the condition vanishes identically (identical affine
    costs) a single flagged candidate at theta_max / 2 stands for the whole family.
    """
    th = d.theta_max
    t = _grid(d, grid_step)
    out: list[Candidate] = []
    for low in (1, 2):
        h = tangency_gap(d, c1, c2, low, t)
        if np.max(np.abs(h)) <= FLAT_TOL * _scale(d, c1, c2):
            # the condition holds at every cutoff; keep one representative
            mid = 0.5 * th
            out.append(Candidate(mid, low, price_line_target(d, c1, c2, low, mid),
                                 flag="first-order condition holds at every cutoff"))
            continue
        roots = []
        for j in range(len(t) - 1):
            if 0 < j and h[j] == 0.0:
                roots.append(float(t[j]))
            elif h[j] * h[j + 1] < 0:
                roots.append(brentq(lambda x: float(tangency_gap(d, c1, c2, low, x)), t[j], t[j + 1],
                                    xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps))
        for r in roots:
            if not 0.0 < r < th:
                continue
            if d.pdf(r) <= 0:
                out.append(Candidate(r, low, None, flag="zero density at cutoff"))
            else:
                out.append(Candidate(r, low, price_line_target(d, c1, c2, low, r)))
    out.append(Candidate(0.0, 1, None, boundary=True))
    out.append(Candidate(th, 1, None, boundary=True))
    return out


def _floor_terms(d: TypeDistribution):
    # rho(0) >= 0 and rho(theta_max) >= 0, i.e. payments non-negative on the whole support
    return np.array([1.0, 1.0]), np.array([0.0, d.theta_max]), np.array([0.0, 0.0])


def _line_interval(A, B, tol):
    """Solve A * x + B >= -tol jointly; returns (lo, hi) or None."""
    tiny = 1e-14
    flat = np.abs(A) <= tiny
    if np.any(B[flat] < -tol):
        return None
    pos, neg = A > tiny, A < -tiny
    lo = np.max((-tol - B[pos]) / A[pos]) if pos.any() else -np.inf
    hi = np.min((-tol - B[neg]) / A[neg]) if neg.any() else np.inf
    if lo > hi:
        return None
    return float(lo), float(hi)


def _scale(d, c1, c2) -> float:
    th = d.theta_max
    return max(float(total_cost(c1, d, 0.0, th)), float(total_cost(c2, d, 0.0, th)), 1e-3)


def equilibrium_segment(d: TypeDistribution, c1: CostFunction, c2: CostFunction, candidate: Candidate,
                        grid_step: float = 1e-3, tol: float = SEGMENT_TOL,
                        nonnegative_prices: bool = True) -> Segment:
    """Maximal set of common prices that make ``candidate`` an equilibrium.

    Interior candidates: the prices lie on the line p_f + t p_l = target, and
    the verified p_f interval is computed exactly on the grid, then tightened
    by cutting planes at the types where the refined check still finds a gain.
    Boundary candidates: the feasible prices form a polygon; its p_f extent is
    found by linear programming over the grid conditions.
    """
    if candidate.boundary:
        return _boundary_segment(d, c1, c2, candidate, grid_step, tol, nonnegative_prices)
    if candidate.price_line_target is None:
        return Segment(None, None, None, tol, ("price line undefined",))
    t, T = candidate.cutoff, candidate.price_line_target
    low = candidate.low_provider
    box = BOX * _scale(d, c1, c2)

    def line_terms(a):
        # conditions along p_l = (T - p_f) / t become A * p_f + B >= 0
        alpha, beta, gamma = condition_terms(d, c1, c2, t, low, a)
        return (alpha - beta / t).ravel(), (gamma + beta * T / t).ravel()

    def rho_at(pf):
        return PriceFunction(pf, (T - pf) / t)

    floor = None
    if nonnegative_prices:
        fa, fb, _ = _floor_terms(d)
        floor = _line_interval(fa - fb / t, fb * T / t, 0.0)

    notes: list[str] = []
    A, B = line_terms(_grid(d, grid_step))
    free, A, B = _cut(A, B, None, tol, box, line_terms, rho_at, candidate.profile, d, c1, c2, grid_step, notes)
    restricted = free
    if nonnegative_prices and free is not None:
        restricted = None
        if floor is not None:
            restricted, A, B = _cut(A, B, floor, tol, box, line_terms, rho_at, candidate.profile, d, c1, c2,
                                    grid_step, notes)
    witness = rho_at(0.5 * (restricted[0] + restricted[1])) if restricted else None
    return Segment(restricted, free, witness, tol, tuple(dict.fromkeys(notes)))


def _intersect(x, y):
    lo, hi = max(x[0], y[0]), min(x[1], y[1])
    return (lo, hi) if lo <= hi else None


def _cut(A, B, floor, tol, box, line_terms, rho_at, profile, d, c1, c2, grid_step, notes):
    """Solve the grid constraints exactly, then add the refined worst types as cuts until both ends pass.

    The feasible p_f set is an intersection of half-lines, so once both ends
    pass the refined check the whole interval does.
    """
    for _ in range(MAX_CUTS):
        # half the tolerance here leaves room for rounding in the verifying check
        iv = _line_interval(A, B, 0.5 * tol)
        if iv is not None and floor is not None:
            iv = _intersect(iv, floor)
        if iv is None:
            return None, A, B
        lo, hi = iv
        if not np.isfinite(lo):
            lo = -box
            notes.append("lower p_f end unbounded; clipped")
        if not np.isfinite(hi):
            hi = box
            notes.append("upper p_f end unbounded; clipped")
        cuts = []
        for end in (lo, hi):
            st = check_bne(d, c1, c2, rho_at(end), profile, grid_step, tol)
            if not st.verified:
                cuts.append(st.worst_a)
        if not cuts:
            return (float(lo) + 0.0, float(hi) + 0.0), A, B
        A2, B2 = line_terms(np.array(cuts))
        A, B = np.concatenate([A, A2]), np.concatenate([B, B2])
    notes.append("cutting planes did not settle")
    return None, A, B


def _envelope_excess(x, lower, upper):
    """lower(x) - upper(x) and its slope, for lines given as (slopes, intercepts)."""
    x = np.atleast_1d(x)
    lv = np.outer(x, lower[0]) + lower[1]
    uv = np.outer(x, upper[0]) + upper[1]
    i, j = np.argmax(lv, axis=1), np.argmin(uv, axis=1)
    rows = np.arange(x.size)
    return lv[rows, i] - uv[rows, j], lower[0][i] - upper[0][j], lv[rows, i], uv[rows, j]


def _newton_root(x, target, lower, upper):
    """Walk from an infeasible end towards ``target`` until the excess reaches zero.

    On a convex piecewise-linear excess every Newton step stays on the
    infeasible side of the root and reaches it after finitely many pieces.
    Rounding can stall the walk a hair short of the root; a bracketing zoom
    against the feasible ``target`` finishes the job.
    """
    for _ in range(PROJECT_ITER):
        g, slope, _, _ = _envelope_excess(x, lower, upper)
        if g[0] <= 0.0:
            return float(x)
        step = float(x - g[0] / slope[0]) if slope[0] != 0.0 else x
        if step == x or (step - target) * (x - target) <= 0:
            break
        x = step
    a, b = x, target
    for _ in range(PROJECT_ITER):
        xs = np.linspace(a, b, 201)
        k = int(np.argmax(_envelope_excess(xs, lower, upper)[0] <= 0.0))
        a, b = xs[k - 1], xs[k]
        if abs(b - a) <= 4 * np.finfo(float).eps * max(abs(a), abs(b), 1.0):
            break
    return float(b)


def _feasible_point(lo, hi, lower, upper):
    """Some x in [lo, hi] with non-positive excess, or None if there is none.

    Zooms on the grid minimiser; tangent lines at the bracket ends bound the
    convex excess from below and prove emptiness as soon as the bound is positive.
    """
    a, b = lo, hi
    for _ in range(PROJECT_ITER):
        xs = np.linspace(a, b, 201)
        g, slope, _, _ = _envelope_excess(xs, lower, upper)
        k = int(np.argmin(g))
        if g[k] <= 0.0:
            return float(xs[k])
        i, j = max(k - 1, 0), min(k + 1, xs.size - 1)
        # max of the two tangents, minimised over [xs[i], xs[j]]
        cand = [xs[i], xs[j]]
        if slope[i] < slope[j]:
            cand.append(np.clip((g[i] - g[j] - slope[i] * xs[i] + slope[j] * xs[j]) / (slope[j] - slope[i]),
                                xs[i], xs[j]))
        c = np.array(cand)
        bound = np.min(np.maximum(g[i] + slope[i] * (c - xs[i]), g[j] + slope[j] * (c - xs[j])))
        if bound > 0.0:
            return None
        a, b = xs[i], xs[j]
        if b - a <= 4 * np.finfo(float).eps * max(abs(a), abs(b), 1.0):
            return None
    return None


def polygon_extent(P, Q, R, x_box: float, y_box: float):
    """Exact x-extent of {(x, y): P x + Q y + R >= 0, |x| <= x_box, |y| <= y_box}.

    For fixed x the feasible y form an interval [lower(x), upper(x)]. The
    excess lower - upper is convex and piecewise linear, so its sublevel set
    {<= 0} is an interval: a zoomed search finds one feasible point and Newton
    steps find both roots. Returns ``((x_lo, x_hi), centre)`` where ``centre``
    is an interior point, or ``(None, None)`` when the set is empty.
    """
    P, Q, R = (np.asarray(v, dtype=float).ravel() for v in (P, Q, R))
    flat = np.abs(Q) <= 1e-13 * max(float(np.max(np.abs(Q), initial=0.0)), 1.0)
    lo, hi = _line_interval(P[flat], R[flat], 0.0) or (None, None)
    if lo is None:
        return None, None
    lo, hi = max(lo, -x_box), min(hi, x_box)
    if lo > hi:
        return None, None
    up, dn = (Q > 0) & ~flat, (Q < 0) & ~flat
    # y >= -(P x + R) / Q where Q > 0, y <= the same where Q < 0, plus the y box
    lower = (np.append(-P[up] / Q[up], 0.0), np.append(-R[up] / Q[up], -y_box))
    upper = (np.append(-P[dn] / Q[dn], 0.0), np.append(-R[dn] / Q[dn], y_box))
    best = _feasible_point(lo, hi, lower, upper)
    if best is None:
        return None, None
    x_lo = lo if _envelope_excess(lo, lower, upper)[0][0] <= 0.0 else _newton_root(lo, best, lower, upper)
    x_hi = hi if _envelope_excess(hi, lower, upper)[0][0] <= 0.0 else _newton_root(hi, best, lower, upper)
    ends = np.array([x_lo, x_hi])
    _, _, l_end, u_end = _envelope_excess(ends, lower, upper)
    return (float(x_lo), float(x_hi)), np.array([ends.mean(), 0.25 * float(np.sum(l_end + u_end))])


def _boundary_segment(d, c1, c2, candidate, grid_step, tol, nonnegative_prices) -> Segment:
    a = _grid(d, grid_step)
    alpha, beta, gamma = condition_terms(d, c1, c2, candidate.cutoff, candidate.low_provider, a)
    box = BOX * _scale(d, c1, c2)
    P, Q, R = alpha.ravel(), beta.ravel(), gamma.ravel() + tol
    free, centre = polygon_extent(P, Q, R, box, box / d.theta_max)
    restricted = free
    if nonnegative_prices and free is not None:
        fa, fb, fc = _floor_terms(d)
        restricted, centre = polygon_extent(np.append(P, fa), np.append(Q, fb), np.append(R, fc), box,
                                            box / d.theta_max)
    notes = []
    witness = None
    if restricted is not None:
        witness = PriceFunction(float(centre[0]), float(centre[1]))
        if not check_bne(d, c1, c2, witness, candidate.profile, grid_step, max(tol, 1e-9)).verified:
            notes.append("grid-feasible prices failed the refined check")
            restricted, witness = None, None
    return Segment(restricted, free, witness, tol, tuple(notes))


def find_all_bne(d: TypeDistribution, c1: CostFunction, c2: CostFunction, grid_step: float = 1e-3,
                 tol: float = SEGMENT_TOL, nonnegative_prices: bool = True) -> list[BneCandidate]:
    """Candidate cutoffs -> verified price segments -> check at the segment witness."""
    found: list[BneCandidate] = []
    seen = set()
    for cand in candidate_cutoffs(d, c1, c2, grid_step):
        seg = equilibrium_segment(d, c1, c2, cand, grid_step, tol, nonnegative_prices)
        if seg.empty or seg.witness is None:
            log.debug("candidate %s rejected", cand)
            continue
        status = check_bne(d, c1, c2, seg.witness, cand.profile, grid_step, max(tol, 1e-9))
        if not status.verified:
            continue
        key = (round(cand.cutoff, 9), cand.low_provider)
        if key in seen:
            continue
        seen.add(key)
        outcome = profits(seg.witness, seg.witness, cand.profile, d, c1, c2)
        notes = seg.notes + ((cand.flag,) if cand.flag else ())
        found.append(BneCandidate(seg.witness, cand.profile, cand.price_line_target, status, seg.p_f_range,
                                  seg.unrestricted_p_f_range, outcome, notes))
    return found
