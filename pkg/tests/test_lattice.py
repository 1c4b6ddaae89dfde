"""Grid construction, backward induction, thresholds, value curves."""

import math

import mpmath
import numpy as np
import pytest

from reopt import (
    OptionSpec,
    PayoffPair,
    UtilityParams,
    backward_induce,
    build_grid,
    calibrate,
    choose_half_height,
    extract_thresholds,
    g_value,
    value_curve,
)
from reopt.calibration import CalibrationInfeasible

from conftest import base_market, degenerate_complete_calibration, grid_from_ladder


def induce(market, option, dt, m=None, **kw):
    n_steps = int(round(option.maturity / dt))
    if m is None:
        m = choose_half_height(market, option, option.maturity / n_steps)
    grid = build_grid(market, option, n_steps, m)
    cal = calibrate(market, grid.dt)
    return grid, cal, backward_induce(grid, cal, option, **kw)


def mpmath_reference_grid(market, option, n_steps, half_height):
    """Exhaustive recursion with the naive formulas in 50-digit arithmetic."""
    with mpmath.workdps(50):
        dt = mpmath.mpf(option.maturity) / n_steps
        sq = mpmath.sqrt(dt)
        u = mpmath.exp(market.sigma1 * sq)
        d = 1 / u
        h = mpmath.exp(market.sigma2 * sq)
        l = 1 / h
        a = (mpmath.exp((market.mu1 - market.r) * dt) - d) / (u - d)
        b = (mpmath.exp((market.mu2 - market.r) * dt) - l) / (h - l)
        p1 = a * b + market.rho * market.sigma1 * market.sigma2 * dt / ((u - d) * (h - l))
        p2, p3, p4 = a - p1, b - p1, 1 - a - b + p1
        q = (1 - d) / (u - d)
        gam = mpmath.mpf(option.gamma)

        def g(x1, x2):
            up = mpmath.log((p1 + p2) / (p1 * mpmath.exp(-gam * x1) + p2 * mpmath.exp(-gam * x2)))
            dn = mpmath.log((p3 + p4) / (p3 * mpmath.exp(-gam * x1) + p4 * mpmath.exp(-gam * x2)))
            return (q * up + (1 - q) * dn) / gam

        rows = 2 * half_height + 1
        v = [mpmath.mpf(market.v0) * h ** (half_height - i) for i in range(rows)]
        alpha = mpmath.mpf(option.cost_growth)
        cost = mpmath.mpf(option.cost)
        strike = [cost * mpmath.exp((alpha - market.r) * n * dt) for n in range(n_steps + 1)]
        col = [max(v[i] - strike[n_steps], mpmath.mpf(0)) for i in range(rows)]
        out = [col]
        for n in range(n_steps - 1, -1, -1):
            new = [mpmath.mpf(0)] * rows
            new[0] = v[0] - strike[n]
            for i in range(1, rows - 1):
                ex = max(v[i] - strike[n], mpmath.mpf(0))
                new[i] = max(ex, g(col[i - 1], col[i + 1]))
            col = new
            out.append(col)
        out.reverse()
        return np.array([[float(x) for x in col] for col in out]).T


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


def test_half_height_base_parameters():
    market = base_market(rho=0.0)
    option = OptionSpec(cost=1.0, maturity=10.0, gamma=1.0)
    assert choose_half_height(market, option, 1.0 / 900.0) == 470


def test_half_height_short_horizon_is_small_but_positive():
    market = base_market(rho=0.0)
    option = OptionSpec(cost=1.0, maturity=0.01, gamma=1.0)
    m = choose_half_height(market, option, 0.01)
    assert 1 <= m <= 10


def test_half_height_diffusion_term_scales_with_sigma2():
    option = OptionSpec(cost=1.0, maturity=10.0, gamma=1.0)
    dt = 1.0 / 900.0
    for sigma2 in (0.1, 0.2, 0.4):
        market = base_market(rho=0.0, sigma2=sigma2)
        drift = abs(market.mu2 - market.r - sigma2**2 / 2) * 10.0
        spread = 4.0 * sigma2 * math.sqrt(10.0)
        expected = max(1, math.ceil((drift + spread) / (sigma2 * math.sqrt(dt))))
        assert choose_half_height(market, option, dt) == expected
    # the four-standard-deviation summand itself is linear in sigma2
    assert 4.0 * 0.4 * math.sqrt(10.0) == pytest.approx(2 * 4.0 * 0.2 * math.sqrt(10.0))


def test_half_height_full_coverage_floor():
    market = base_market(rho=0.0)
    option = OptionSpec(cost=1.0, maturity=10.0, gamma=1.0)
    m = choose_half_height(market, option, 1.0 / 900.0, full_coverage=True)
    assert m >= 9000


def test_grid_ladder_minimal():
    market = base_market(rho=0.0)
    option = OptionSpec(cost=1.0, maturity=1.0, gamma=1.0)
    grid = build_grid(market, option, n_steps=1, half_height=1)
    h = math.exp(0.2 * 1.0)
    assert grid.row_values == pytest.approx([h, 1.0, 1.0 / h], abs=1e-15)
    assert grid.row_values[1] == 1.0


def test_grid_ladder_geometry():
    market = base_market(rho=0.3)
    option = OptionSpec(cost=1.0, maturity=10.0, gamma=1.0)
    grid = build_grid(market, option, n_steps=9000, half_height=40)
    h = math.exp(0.2 * math.sqrt(grid.dt))
    assert grid.row_values[0] == pytest.approx(h**40, rel=1e-13)
    assert grid.row_values[grid.half_height] == 1.0
    # symmetric about v0 in log space
    prod = grid.row_values * grid.row_values[::-1]
    assert np.allclose(prod, 1.0, atol=1e-12)
    assert np.all(np.diff(grid.row_values) < 0)
    assert grid.dt * grid.n_steps == pytest.approx(10.0, abs=1e-12)


def test_grid_propagates_infeasibility():
    market = base_market(rho=0.99)
    option = OptionSpec(cost=1.0, maturity=10.0, gamma=1.0)
    with pytest.raises(CalibrationInfeasible):
        build_grid(market, option, n_steps=1000, half_height=100)


# ---------------------------------------------------------------------------
# backward induction
# ---------------------------------------------------------------------------


def test_single_step_reduces_to_one_period_formula():
    market = base_market(rho=0.5)
    option = OptionSpec(cost=1.0, maturity=1.0, gamma=2.0)
    grid, cal, vg = induce(market, option, dt=1.0, m=1)
    h = cal.h
    disc_cost = math.exp(-market.r * 1.0)
    cont = g_value(
        PayoffPair(max(h - disc_cost, 0.0), max(1.0 / h - disc_cost, 0.0)),
        cal,
        UtilityParams(2.0),
    )
    expected = max(max(1.0 - 1.0, 0.0), cont)
    assert vg.values_t0[1] == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("rho,gamma", [(0.5, 1.0), (-0.3, 4.0)])
def test_small_lattice_matches_extended_precision_recursion(rho, gamma):
    market = base_market(rho=rho)
    option = OptionSpec(cost=1.0, maturity=0.5, gamma=gamma)
    n_steps, m = 3, 4
    grid = build_grid(market, option, n_steps, m)
    cal = calibrate(market, grid.dt)
    vg = backward_induce(grid, cal, option, keep_grid=True)
    ref = mpmath_reference_grid(market, option, n_steps, m)
    assert np.max(np.abs(vg.values - ref)) < 1e-12


def test_value_dominance_and_monotonicity():
    market = base_market(rho=0.5)
    option = OptionSpec(cost=1.0, maturity=2.0, gamma=1.0)
    grid, cal, vg = induce(market, option, dt=0.02, keep_grid=True)
    strike = option.cost * np.exp(-market.r * np.arange(grid.n_steps + 1) * grid.dt)
    exercise = np.maximum(grid.row_values[:, None] - strike[None, :], 0.0)
    assert np.all(vg.values >= -1e-15)
    assert np.all(vg.values - exercise >= -1e-12)
    # nonincreasing in the row index (decreasing project value) at every time
    assert np.all(np.diff(vg.values, axis=0) <= 1e-12)
    assert not vg.anomalous.any()


def test_complete_market_values_do_not_depend_on_gamma():
    cal = degenerate_complete_calibration(dt=0.02)
    grid = grid_from_ladder(v0=1.0, sigma2=0.2, dt=0.02, half_height=40, n_steps=50)
    option_lo = OptionSpec(cost=1.0, maturity=1.0, gamma=0.5)
    option_hi = OptionSpec(cost=1.0, maturity=1.0, gamma=5.0)
    lo = backward_induce(grid, cal, option_lo).values_t0
    hi = backward_induce(grid, cal, option_hi).values_t0
    scale = np.maximum(np.abs(lo), 1e-30)
    assert np.max(np.abs(lo - hi) / scale) < 1e-9


def test_high_risk_aversion_collapses_to_npv():
    market = base_market(rho=0.0)
    option = OptionSpec(cost=1.0, maturity=10.0, gamma=100.0)
    grid, cal, vg = induce(market, option, dt=0.01)
    npv = np.maximum(grid.row_values - option.cost, 0.0)
    cell = grid.row_values * (grid.step_ratio - 1.0)
    assert np.all(vg.values_t0 - npv >= -1e-12)
    assert np.max(vg.values_t0 - npv) < cell.max()


def test_rejects_grid_with_negative_top_boundary():
    market = base_market(rho=0.5)
    option = OptionSpec(cost=50.0, maturity=1.0, gamma=1.0)
    grid = build_grid(market, option, n_steps=10, half_height=3)
    cal = calibrate(market, grid.dt)
    with pytest.raises(ValueError, match="top boundary"):
        backward_induce(grid, cal, option)


def test_continuation_operator_name_is_checked():
    market = base_market(rho=0.5)
    option = OptionSpec(cost=1.0, maturity=1.0, gamma=1.0)
    grid = build_grid(market, option, 10, 5)
    cal = calibrate(market, grid.dt)
    with pytest.raises(ValueError, match="continuation"):
        backward_induce(grid, cal, option, continuation="euler")


# ---------------------------------------------------------------------------
# thresholds and value curves
# ---------------------------------------------------------------------------


def test_terminal_threshold_is_first_row_above_strike():
    market = base_market(rho=0.5)
    option = OptionSpec(cost=1.0, maturity=2.0, gamma=1.0)
    grid, cal, vg = induce(market, option, dt=0.02)
    curve = extract_thresholds(vg, grid, option)
    k_term = option.cost * math.exp(-market.r * option.maturity)
    above = grid.row_values[grid.row_values > k_term]
    assert curve.threshold_discounted[-1] == above[-1]
    assert curve.time_to_maturity[0] == pytest.approx(2.0)
    assert curve.time_to_maturity[-1] == pytest.approx(0.0, abs=1e-12)
    finite = np.isfinite(curve.threshold_discounted)
    assert np.all(curve.threshold_discounted[finite] <= grid.row_values[0])
    assert np.all(curve.threshold_discounted[finite] >= grid.row_values[-1])
    # spot and discounted agree at t = 0 and carry the grid-cell half width
    assert curve.threshold_spot[0] == curve.threshold_discounted[0]
    assert curve.resolution_halfwidth[0] == pytest.approx(
        curve.threshold_discounted[0] * (grid.step_ratio - 1.0)
    )


def test_exercise_region_is_up_set_on_base_runs():
    for rho, gamma in ((0.0, 1.0), (0.9, 0.1), (0.5, 10.0)):
        market = base_market(rho=rho)
        option = OptionSpec(cost=1.0, maturity=10.0, gamma=gamma)
        _, _, vg = induce(market, option, dt=0.02)
        assert not vg.anomalous.any()
        assert not vg.no_exercise.any()


def test_grid_refinement_moves_threshold_less_than_one_coarse_cell():
    market = base_market(rho=0.5)
    option = OptionSpec(cost=1.0, maturity=10.0, gamma=1.0)
    grid_c, _, vg_c = induce(market, option, dt=0.01)
    grid_f, _, vg_f = induce(market, option, dt=0.005)
    thr_c = extract_thresholds(vg_c, grid_c, option).spot_t0
    thr_f = extract_thresholds(vg_f, grid_f, option).spot_t0
    coarse_cell = thr_c * (grid_c.step_ratio - 1.0)
    assert abs(thr_f - thr_c) < coarse_cell


def test_value_curve_boundaries_and_pasting_slope():
    market = base_market(rho=0.5)
    option = OptionSpec(cost=1.0, maturity=10.0, gamma=1.0)
    grid, cal, vg = induce(market, option, dt=1.0 / 300.0)
    points = value_curve(vg, grid, 0)
    v_spot, c_spot = points[:, 0], points[:, 1]
    assert c_spot[0] == pytest.approx(v_spot[0] - option.cost, abs=1e-12)
    assert c_spot[-1] == 0.0
    thr = extract_thresholds(vg, grid, option).spot_t0
    i = int(np.argmin(np.abs(v_spot - thr)))
    slope = (c_spot[i - 1] - c_spot[i + 1]) / (v_spot[i - 1] - v_spot[i + 1])
    assert 0.85 <= slope <= 1.1


def test_value_curve_requires_retained_column():
    market = base_market(rho=0.5)
    option = OptionSpec(cost=1.0, maturity=1.0, gamma=1.0)
    grid, cal, vg = induce(market, option, dt=0.1)
    assert value_curve(vg, grid, 0).shape == (grid.n_rows, 2)
    with pytest.raises(ValueError):
        value_curve(vg, grid, 3)
    with pytest.raises(IndexError):
        value_curve(vg, grid, 99)
    _, _, vg_full = induce(market, option, dt=0.1, keep_grid=True)
    mid = value_curve(vg_full, grid, 5)
    factor = math.exp(market.r * 5 * grid.dt)
    assert mid[:, 0] == pytest.approx(factor * grid.row_values)


def test_option_spec_validation():
    with pytest.raises(ValueError):
        OptionSpec(cost=0.0, maturity=1.0, gamma=1.0)
    with pytest.raises(ValueError):
        OptionSpec(cost=1.0, maturity=-1.0, gamma=1.0)
    with pytest.raises(ValueError):
        OptionSpec(cost=1.0, maturity=1.0, gamma=0.0)
    with pytest.raises(ValueError):
        OptionSpec(cost=1.0, maturity=1.0, gamma=1.0, cost_growth=math.inf)
