import numpy as np
import pytest

from scenarios import random_scenario
from varpricing import (CostFunction, DeviationGrid, PriceFunction, Uniform, UserProfile,
                        candidate_cutoffs, check_bne, epsilon_bne_verify, equilibrium_segment, find_all_bne)
from varpricing.cost import total_cost
from varpricing.equilibrium import CONDITIONS, price_line_target, tangency_gap


def test_candidates_on_example(example):
    d, c1, c2 = example
    cands = candidate_cutoffs(d, c1, c2)
    interior = sorted((c.cutoff, c.low_provider) for c in cands if not c.boundary)
    assert [low for _, low in interior] == [2, 1]
    assert interior[1][0] == pytest.approx(0.5954, abs=1e-4)
    assert interior[0][0] == pytest.approx(0.5431, abs=1e-4)
    one = next(c for c in cands if c.low_provider == 1 and not c.boundary)
    assert one.price_line_target == pytest.approx(0.2784, abs=1e-4)
    assert {c.cutoff for c in cands if c.boundary} == {0.0, 1.0}


def test_check_bne_example(example):
    d, c1, c2 = example
    rho = PriceFunction(0.0, 0.4676)
    assert check_bne(d, c1, c2, rho, UserProfile(0.595, 1)).verified
    bad = check_bne(d, c1, c2, PriceFunction(0.05, (0.2784 - 0.05) / 0.595), UserProfile(0.595, 1))
    assert not bad.verified
    assert bad.condition == "high_keeps"
    assert bad.gap < -bad.tol


def test_segment_example(example):
    d, c1, c2 = example
    cand = next(c for c in candidate_cutoffs(d, c1, c2) if c.low_provider == 1 and not c.boundary)
    seg = equilibrium_segment(d, c1, c2, cand)
    lo, hi = seg.p_f_range
    assert lo == pytest.approx(0.0, abs=1e-12)
    assert hi == pytest.approx(0.0409, abs=1e-4)
    assert seg.unrestricted_p_f_range[0] == pytest.approx(-0.0761, abs=1e-4)
    for pf in np.linspace(lo, hi, 7):
        rho = PriceFunction(pf, (cand.price_line_target - pf) / cand.cutoff)
        assert check_bne(d, c1, c2, rho, cand.profile, tol=1e-9).verified
    # just outside the range one of the conditions fails
    out = hi + 1e-4
    rho = PriceFunction(out, (cand.price_line_target - out) / cand.cutoff)
    assert not check_bne(d, c1, c2, rho, cand.profile).verified


def test_find_all_bne_example(example):
    d, c1, c2 = example
    found = find_all_bne(*example)
    assert len(found) == 1
    b = found[0]
    assert b.profile.low_provider == 1
    assert b.profile.cutoff == pytest.approx(0.5954, abs=1e-4)
    assert b.on_price_line()
    assert b.outcome.welfare == pytest.approx(-0.2055, abs=1e-4)


def test_find_all_bne_without_floor(example):
    found = find_all_bne(*example, nonnegative_prices=False)
    assert len(found) == 1
    assert found[0].unrestricted_p_f_range[0] == pytest.approx(-0.0761, abs=1e-4)


@pytest.mark.parametrize("seed", range(10))
def test_tangency_matches_finite_difference(seed):
    # tangency gap * f(t) equals d/dt [c_low(0,t)] + d/dt [c_high(t,theta_max)] in total-cost form
    d, c1, c2 = random_scenario(seed)
    th = d.theta_max
    h = 1e-6
    for low in (1, 2):
        c_low, c_high = (c1, c2) if low == 1 else (c2, c1)
        for t in np.linspace(0.1, 0.9, 5) * th:
            fd = ((total_cost(c_low, d, 0, t + h) - total_cost(c_low, d, 0, t - h))
                  + (total_cost(c_high, d, t + h, th) - total_cost(c_high, d, t - h, th))) / (2 * h)
            analytic = tangency_gap(d, c1, c2, low, t) * d.pdf(t)
            assert analytic == pytest.approx(fd, abs=1e-6)
            # the price-line target is the marginal low cost per unit density
            fd_low = (total_cost(c_low, d, 0, t + h) - total_cost(c_low, d, 0, t - h)) / (2 * h)
            assert price_line_target(d, c1, c2, low, t) * d.pdf(t) == pytest.approx(fd_low, abs=1e-6)


def test_symmetric_quadratic_zero_profit():
    d = Uniform(1.0)
    c = CostFunction((0.1, 0.0, 0.5))
    # the symmetric equilibrium charges a negative fixed part
    assert find_all_bne(d, c.relabel(1), c.relabel(2)) == []
    found = find_all_bne(d, c.relabel(1), c.relabel(2), nonnegative_prices=False)
    assert found
    for b in found:
        assert abs(b.outcome.profit_1) <= 1e-6 and abs(b.outcome.profit_2) <= 1e-6


def test_identical_affine_costs_flagged():
    d = Uniform(1.0)
    c = CostFunction((0.1, 0.5))
    cands = [x for x in candidate_cutoffs(d, c.relabel(1), c.relabel(2)) if not x.boundary]
    assert len(cands) == 2
    assert all(x.flag and x.cutoff == 0.5 for x in cands)
    found = find_all_bne(d, c.relabel(1), c.relabel(2))
    assert any(x.notes for x in found)
    for b in found:
        assert b.rho.p_f == pytest.approx(0.1) and b.rho.p_l == pytest.approx(0.5)


def test_scenario_without_bne():
    d, c1, c2 = random_scenario(6)
    assert find_all_bne(d, c1, c2, grid_step=1e-2) == []
    assert find_all_bne(d, c1, c2) == []


def test_check_bne_conditions_order(example):
    d, c1, c2 = example
    st = check_bne(d, c1, c2, PriceFunction(1.0, 0.0), UserProfile(0.5, 1))
    assert st.condition in CONDITIONS


@pytest.mark.parametrize("seed", range(8))
def test_oracle_agrees_with_verified_bne(seed):
    d, c1, c2 = random_scenario(seed)
    for b in find_all_bne(d, c1, c2, grid_step=1e-2):
        rep = epsilon_bne_verify(d, c1, c2, b.rho, b.rho, b.profile, 1e-6, DeviationGrid.default(d, c1, c2, 101))
        assert rep.certified, (seed, rep)


def test_oracle_finds_gain_outside_segment(example):
    d, c1, c2 = example
    rho = PriceFunction(0.05, 0.4676)
    grid = DeviationGrid((-0.2, 0.6), (-0.5, 1.5), 161)
    rep = epsilon_bne_verify(d, c1, c2, rho, rho, UserProfile(0.595, 1), 1e-6, grid)
    assert not rep.certified


@pytest.mark.parametrize("seed", range(40))
def test_polygon_extent_matches_linprog(seed):
    from scipy.optimize import linprog

    from varpricing.equilibrium import BOX, _grid, _scale, condition_terms, polygon_extent

    d, c1, c2 = random_scenario(seed)
    box = BOX * _scale(d, c1, c2)
    for cut in (0.0, d.theta_max):
        alpha, beta, gamma = condition_terms(d, c1, c2, cut, 1, _grid(d, 1e-2))
        P, Q, R = alpha.ravel(), beta.ravel(), gamma.ravel() + 1e-10
        ext, centre = polygon_extent(P, Q, R, box, box / d.theta_max)
        bounds = [(-box, box), (-box / d.theta_max, box / d.theta_max)]
        lp = [linprog([sign, 0.0], A_ub=-np.column_stack([P, Q]), b_ub=R, bounds=bounds, method="highs")
              for sign in (1.0, -1.0)]
        assert (ext is None) == (lp[0].status != 0)
        if ext is not None:
            assert ext[0] == pytest.approx(lp[0].x[0], abs=1e-7)
            assert ext[1] == pytest.approx(lp[1].x[0], abs=1e-7)
            assert np.min(P * centre[0] + Q * centre[1] + R) >= -1e-12


def test_polygon_extent_small_cases():
    from varpricing.equilibrium import polygon_extent

    # triangle x >= 0, y >= 0, x + y <= 1
    ext, centre = polygon_extent([1, 0, -1], [0, 1, -1], [0, 0, 1], 10, 10)
    assert ext == pytest.approx((0.0, 1.0), abs=1e-14)
    # y >= x + 1 and y <= x - 1 cannot hold together
    assert polygon_extent([-1, 1], [1, -1], [-1, -1], 10, 10) == (None, None)
    # only the box binds
    ext, _ = polygon_extent([0.0], [1.0], [5.0], 3, 2)
    assert ext == (-3, 3)
