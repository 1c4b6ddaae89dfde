"""Backward induction for the early-exercise investment option.

The project value lives on a ladder of 2M+1 rows

    V(i) = h^(M+1-i) * V0,     i = 1, ..., 2M+1

(highest value in row 1, V0 in the middle row), repeated across N+1 time
columns.  Option values are filled from maturity backwards: at every
interior node the investor compares the immediate exercise value with
the certainty equivalent of the two project successors one step ahead,

    C[i, n] = max( (V(i) - K_n)^+ , g(C[i-1, n+1], C[i+1, n+1]) )

where K_n = exp((alpha - r) t_n) * I is the discounted investment cost
(cost I growing at rate alpha) and the first argument of g is the
project-up successor.  The top row is always exercised, the bottom row
is worthless.  All quantities are discounted; spot conversions happen
only in reporting helpers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calibration import LatticeCalibration, MarketParams, calibrate
from .indifference import g_values, linear_limit_values

__all__ = [
    "OptionSpec",
    "GridSpec",
    "ValueGrid",
    "ThresholdCurve",
    "choose_half_height",
    "build_grid",
    "backward_induce",
    "extract_thresholds",
    "value_curve",
]


@dataclass(frozen=True)
class OptionSpec:
    """The investment opportunity: pay ``cost`` for the project, any time
    up to ``maturity``.  ``cost_growth`` lets the cost drift at a fixed
    rate alpha (0 keeps it constant, alpha = r reproduces the constant
    discounted strike case)."""

    cost: float
    maturity: float
    gamma: float
    cost_growth: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.cost) and self.cost > 0.0):
            raise ValueError("cost must be positive")
        if not (math.isfinite(self.maturity) and self.maturity > 0.0):
            raise ValueError("maturity must be positive")
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError("gamma must be positive")
        if not math.isfinite(self.cost_growth):
            raise ValueError("cost_growth must be finite")


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the valuation grid: N time steps of size dt and a
    ladder of 2M+1 project-value rows, strictly decreasing, with the
    middle row equal to v0 exactly."""

    n_steps: int
    half_height: int
    dt: float
    v0: float
    row_values: np.ndarray

    @property
    def n_rows(self) -> int:
        return 2 * self.half_height + 1

    @property
    def step_ratio(self) -> float:
        """Multiplicative spacing h between adjacent rows."""
        return float(self.row_values[self.half_height - 1] / self.v0)


def choose_half_height(
    market: MarketParams,
    option: OptionSpec,
    dt: float,
    full_coverage: bool = False,
) -> int:
    """Pick M so the ladder spans four standard deviations of log V.

    M = ceil[ (|mu2 - r - sigma2^2/2| T + 4 sigma2 sqrt(T)) / (sigma2 sqrt(dt)) ],
    i.e. the drift plus four diffusion standard deviations of the log
    project value over the horizon, measured in grid steps.  With
    ``full_coverage`` the result is additionally raised to the step count
    N so every path of the recombining walk stays on the grid; the
    default leaves the statistical bound in charge.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    drift = abs(market.mu2 - market.r - market.sigma2**2 / 2.0) * option.maturity
    spread = 4.0 * market.sigma2 * math.sqrt(option.maturity)
    m = math.ceil((drift + spread) / (market.sigma2 * math.sqrt(dt)))
    if full_coverage:
        m = max(m, int(round(option.maturity / dt)))
    return max(m, 1)


def build_grid(
    market: MarketParams,
    option: OptionSpec,
    n_steps: int,
    half_height: int,
    p_tol: float = 0.0,
) -> GridSpec:
    """Construct the row ladder for an N-step grid of the given half height.

    Validates that the implied step dt = maturity / n_steps admits a
    feasible calibration (errors propagate from :func:`calibrate`).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if half_height < 1:
        raise ValueError("half_height must be at least 1")
    dt = option.maturity / n_steps
    calibrate(market, dt, p_tol)
    h = math.exp(market.sigma2 * math.sqrt(dt))
    exponents = np.arange(half_height, -half_height - 1, -1, dtype=float)
    rows = market.v0 * h**exponents
    return GridSpec(
        n_steps=n_steps,
        half_height=half_height,
        dt=dt,
        v0=market.v0,
        row_values=rows,
    )


@dataclass
class ValueGrid:
    """Result of the backward induction.

    ``values`` and ``exercise_mask`` hold the full (2M+1, N+1) arrays when
    the induction was run with ``keep_grid=True``; otherwise only the
    time-0 column survives (the induction needs just two adjacent columns,
    and sweeps multiply memory).  Per-column exercise summaries are always
    recorded so thresholds can be extracted in either mode:

    ``exercise_depth[n]``  number of consecutive exercised rows from the top;
    ``anomalous[n]``       an exercised node exists below that run, i.e. the
                           exercise region is not an up-set in V (flagged,
                           never repaired);
    ``no_exercise[n]``     nothing exercises beyond the forced top boundary.

    The exercise mask marks nodes where the exercise value attains the
    maximum (ties count as exercise) and is strictly positive; the latter
    keeps the worthless bottom boundary, where 0 ties with 0, out of the
    exercise region.
    """

    values: np.ndarray
    exercise_mask: np.ndarray
    exercise_depth: np.ndarray
    anomalous: np.ndarray
    no_exercise: np.ndarray
    r: float
    dt: float
    n_steps: int
    keep_grid: bool
    strike_schedule: np.ndarray = field(repr=False, default=None)

    def column(self, n: int) -> np.ndarray:
        """Discounted option values at time index n."""
        if not 0 <= n <= self.n_steps:
            raise IndexError(f"time index {n} outside 0..{self.n_steps}")
        if self.keep_grid:
            return self.values[:, n]
        if n != 0:
            raise ValueError("only the time-0 column was retained; rerun with keep_grid=True")
        return self.values

    @property
    def values_t0(self) -> np.ndarray:
        return self.column(0)


def _mask_summary(mask: np.ndarray, forced_top: bool) -> tuple[int, bool, bool]:
    false_idx = np.flatnonzero(~mask)
    depth = int(false_idx[0]) if false_idx.size else len(mask)
    anomalous = bool(mask[depth:].any())
    floor = 1 if forced_top else 0
    return depth, anomalous, depth <= floor


def backward_induce(
    grid: GridSpec,
    cal: LatticeCalibration,
    option: OptionSpec,
    keep_grid: bool = False,
    continuation: str = "utility",
) -> ValueGrid:
    """Fill the grid from maturity backwards and record exercise decisions.

    ``continuation`` selects the certainty-equivalent operator: "utility"
    is the exponential-utility g at ``option.gamma``; "linear" is its
    analytically evaluated gamma -> 0 limit (used for the risk-neutral
    benchmark, where a vanishing gamma would be numerically fragile).

    Time columns are processed sequentially (hard data dependency); rows
    within a column are vectorized.  The whole routine is pure, so
    independent inductions may run in parallel.
    """
    if abs(cal.dt - grid.dt) > 1e-12 * max(1.0, grid.dt):
        raise ValueError("calibration and grid use different time steps")
    if continuation == "utility":
        cont_of = lambda x_up, x_dn: g_values(x_up, x_dn, cal, option.gamma)
    elif continuation == "linear":
        cont_of = lambda x_up, x_dn: linear_limit_values(x_up, x_dn, cal)
    else:
        raise ValueError(f"unknown continuation operator {continuation!r}")

    n_steps = grid.n_steps
    rows = grid.n_rows
    v = grid.row_values
    t = np.arange(n_steps + 1) * grid.dt
    strike = option.cost * np.exp((option.cost_growth - cal.r) * t)
    if v[0] - strike.max() < 0.0:
        raise ValueError(
            "top boundary value is negative: half_height too small for the "
            "always-exercise boundary condition"
        )

    depth = np.zeros(n_steps + 1, dtype=int)
    anomalous = np.zeros(n_steps + 1, dtype=bool)
    no_exercise = np.zeros(n_steps + 1, dtype=bool)
    if keep_grid:
        all_values = np.empty((rows, n_steps + 1))
        all_mask = np.zeros((rows, n_steps + 1), dtype=bool)

    payoff = v - strike[n_steps]
    col = np.maximum(payoff, 0.0)
    mask = payoff > 0.0
    depth[n_steps], anomalous[n_steps], no_exercise[n_steps] = _mask_summary(mask, False)
    if keep_grid:
        all_values[:, n_steps] = col
        all_mask[:, n_steps] = mask

    for n in range(n_steps - 1, -1, -1):
        cont = cont_of(col[:-2], col[2:])
        ex = np.maximum(v - strike[n], 0.0)
        new = np.empty(rows)
        new[0] = v[0] - strike[n]
        new[-1] = 0.0
        new[1:-1] = np.maximum(ex[1:-1], cont)
        mask = np.zeros(rows, dtype=bool)
        mask[0] = True
        mask[1:-1] = (ex[1:-1] >= cont) & (ex[1:-1] > 0.0)
        depth[n], anomalous[n], no_exercise[n] = _mask_summary(mask, True)
        col = new
        if keep_grid:
            all_values[:, n] = col
            all_mask[:, n] = mask

    return ValueGrid(
        values=all_values if keep_grid else col,
        exercise_mask=all_mask if keep_grid else mask,
        exercise_depth=depth,
        anomalous=anomalous,
        no_exercise=no_exercise,
        r=cal.r,
        dt=grid.dt,
        n_steps=n_steps,
        keep_grid=keep_grid,
        strike_schedule=strike,
    )


@dataclass(frozen=True)
class ThresholdCurve:
    """Exercise thresholds per time step, discounted and spot.

    Columns with no exercise region carry NaN thresholds and are flagged
    through ``no_exercise``; columns whose exercise region fails to be an
    up-set in V keep the threshold of the contiguous top run and are
    flagged through ``anomalous``.  ``resolution_halfwidth`` is the size
    of one grid cell at the threshold, V* (h - 1), the quantization error
    of the reported value.
    """

    n: np.ndarray
    t: np.ndarray
    time_to_maturity: np.ndarray
    threshold_discounted: np.ndarray
    threshold_spot: np.ndarray
    resolution_halfwidth: np.ndarray
    anomalous: np.ndarray
    no_exercise: np.ndarray

    def at(self, n: int) -> float:
        """Spot threshold at time index n (NaN when absent)."""
        return float(self.threshold_spot[n])

    @property
    def spot_t0(self) -> float:
        return self.at(0)


def extract_thresholds(
    vg: ValueGrid, grid: GridSpec, option: OptionSpec
) -> ThresholdCurve:
    """Read the per-column exercise thresholds off an induced grid.

    The threshold at time n is the smallest row value whose node
    exercises with every higher row exercising too.  Exercise regions
    that are not up-sets are flagged as anomalous rather than silently
    repaired.
    """
    n_idx = np.arange(vg.n_steps + 1)
    t = n_idx * vg.dt
    h = grid.step_ratio
    disc = np.full(vg.n_steps + 1, np.nan)
    usable = ~vg.no_exercise
    rows = np.clip(vg.exercise_depth - 1, 0, grid.n_rows - 1)
    disc[usable] = grid.row_values[rows[usable]]
    spot = disc * np.exp(vg.r * t)
    return ThresholdCurve(
        n=n_idx,
        t=t,
        time_to_maturity=option.maturity - t,
        threshold_discounted=disc,
        threshold_spot=spot,
        resolution_halfwidth=disc * (h - 1.0),
        anomalous=vg.anomalous.copy(),
        no_exercise=vg.no_exercise.copy(),
    )


def value_curve(vg: ValueGrid, grid: GridSpec, at_time_index: int) -> np.ndarray:
    """Option value against project value at one time index, in spot terms.

    Returns an array of (spot project value, spot option value) pairs,
    one per grid row, suitable for plotting or CSV export.
    """
    col = vg.column(at_time_index)
    factor = math.exp(vg.r * at_time_index * vg.dt)
    return np.column_stack((factor * grid.row_values, factor * col))
