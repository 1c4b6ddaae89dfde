"""One-period exponential-utility indifference pricing.

Core object is the certainty-equivalent operator g.  For a claim paying
``x_h`` in the project-up states and ``x_l`` in the project-down states
of the four-state lattice, an investor with utility U(x) = -exp(-gamma x)
who can trade the correlated asset values the claim at

    g(x_h, x_l) = (q / gamma)   * log[(p1 + p2) / (p1 e^{-gamma x_h} + p2 e^{-gamma x_l})]
                + ((1-q)/gamma) * log[(p3 + p4) / (p3 e^{-gamma x_h} + p4 e^{-gamma x_l})]

with q = (1 - d)/(u - d).  The module also provides an independent
numeric oracle that recovers the same price straight from the defining
utility-maximization problems, and the gamma -> 0 / gamma -> infinity
limits of g.

All exponentials are evaluated through shifted log-sum-exp so that
|gamma * payoff| of several hundred causes no overflow; the naive form
is never used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .calibration import LatticeCalibration

__all__ = [
    "BracketFailure",
    "UtilityParams",
    "PayoffPair",
    "g_value",
    "g_values",
    "linear_limit_values",
    "numeric_indifference_price",
    "gamma_limits",
]

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


class BracketFailure(RuntimeError):
    """The inner utility maximization could not bracket its optimum."""


@dataclass(frozen=True)
class UtilityParams:
    """Exponential-utility risk aversion, applied to discounted wealth.

    ``gamma`` must be strictly positive; the gamma -> 0 and
    gamma -> infinity behaviours are limit properties exposed through
    :func:`gamma_limits`, not admissible inputs.
    """

    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError("gamma must be positive and finite")


class PayoffPair(NamedTuple):
    """Discounted claim payoffs in the project-up and project-down states."""

    x_h: float
    x_l: float


def _branch_contribution(w_hi: float, w_lo: float, a_hi, a_lo):
    """log(w_hi + w_lo) - log(w_hi exp(a_hi) + w_lo exp(a_lo)), stably.

    Weights are scalars fixed by the calibration; exponents may be arrays.
    Zero weights cancel their log term exactly, so a degenerate branch
    returns -a outright; this keeps complete-market lattices free of
    gamma to relative rounding, not merely approximately.  A marginally
    negative weight from a relaxed calibration is anchored at the
    positive-weight exponent; if the mixture itself is not positive the
    value is undefined and rejected.
    """
    if w_lo == 0.0:
        return -a_hi
    if w_hi == 0.0:
        return -a_lo
    log_total = math.log(w_hi + w_lo)
    if w_hi > 0.0 and w_lo > 0.0:
        m = np.maximum(a_hi, a_lo)
        return log_total - m - np.log(w_hi * np.exp(a_hi - m) + w_lo * np.exp(a_lo - m))
    with np.errstate(over="ignore", invalid="ignore"):
        if w_hi > 0.0:
            out = log_total - a_hi - np.log(w_hi + w_lo * np.exp(a_lo - a_hi))
        else:
            out = log_total - a_lo - np.log(w_lo + w_hi * np.exp(a_hi - a_lo))
    if not np.all(np.isfinite(out)):
        raise ValueError(
            "certainty equivalent undefined: signed branch weight dominates the mixture"
        )
    return out


def g_values(x_up, x_dn, cal: LatticeCalibration, gamma: float):
    """Vectorized certainty-equivalent operator.

    ``x_up`` and ``x_dn`` are the payoffs in the project-up and
    project-down states (arrays of equal shape, or scalars).  This is the
    hot path of the lattice recursion.
    """
    if gamma <= 0.0 or not math.isfinite(gamma):
        raise ValueError("gamma must be positive and finite")
    a_up = -gamma * np.asarray(x_up, dtype=float)
    a_dn = -gamma * np.asarray(x_dn, dtype=float)
    branch_up = _branch_contribution(cal.p1, cal.p2, a_up, a_dn)
    branch_dn = _branch_contribution(cal.p3, cal.p4, a_up, a_dn)
    return (cal.q * branch_up + (1.0 - cal.q) * branch_dn) / gamma


def g_value(pay: PayoffPair, cal: LatticeCalibration, util: UtilityParams) -> float:
    """Indifference price of the one-period claim (x_h, x_l)."""
    if not (math.isfinite(pay.x_h) and math.isfinite(pay.x_l)):
        raise ValueError("payoffs must be finite")
    return float(g_values(pay.x_h, pay.x_l, cal, util.gamma))


def linear_limit_values(x_up, x_dn, cal: LatticeCalibration):
    """gamma -> 0 limit of g, vectorized.

    A plain expectation under the measure that keeps the risk-neutral
    weight q on the traded-asset branches and the historical conditional
    probabilities within each branch.
    """
    x_up = np.asarray(x_up, dtype=float)
    x_dn = np.asarray(x_dn, dtype=float)
    up = (cal.p1 * x_up + cal.p2 * x_dn) / (cal.p1 + cal.p2)
    dn = (cal.p3 * x_up + cal.p4 * x_dn) / (cal.p3 + cal.p4)
    return cal.q * up + (1.0 - cal.q) * dn


def gamma_limits(pay: PayoffPair, cal: LatticeCalibration) -> tuple[float, float]:
    """(gamma -> 0, gamma -> infinity) limits of g for this payoff.

    The low limit is the linear certainty equivalent above; the high
    limit is the subhedge value min(x_h, x_l).
    """
    if not (math.isfinite(pay.x_h) and math.isfinite(pay.x_l)):
        raise ValueError("payoffs must be finite")
    low = float(linear_limit_values(pay.x_h, pay.x_l, cal))
    high = min(pay.x_h, pay.x_l)
    return low, high


def numeric_indifference_price(
    pay: PayoffPair,
    cal: LatticeCalibration,
    util: UtilityParams,
    x0: float = 0.0,
    s0: float = 1.0,
) -> float:
    """Indifference price recomputed from the defining optimization problems.

    Solves max_H E[U(x0 + H (S_T - S_0))] with and without the claim by a
    derivative-free bracketed search over the hedge H (tolerance 1e-12),
    then finds the price pi equating the two optima by bisection
    (tolerance 1e-10).  The maximization is repeated at every bisection
    point, so the routine exercises the definition literally instead of
    exploiting the wealth separability of exponential utility; the result
    is nevertheless independent of ``x0``, which tests rely on.

    Kept free of any code shared with :func:`g_value` so the two routes
    stay independent checks of one another.

    Raises
    ------
    BracketFailure
        If the inner objective cannot be bracketed, which indicates a
        degenerate calibration (e.g. a dominated branch turning the
        expected utility monotone in H).
    """
    gamma = util.gamma
    xh, xl = pay.x_h, pay.x_l
    if not (math.isfinite(xh) and math.isfinite(xl) and math.isfinite(x0)):
        raise ValueError("payoffs and initial wealth must be finite")

    log_p = [math.log(p) if p > 0.0 else None for p in cal.probabilities]
    signed = [(i, p) for i, p in enumerate(cal.probabilities) if log_p[i] is None]
    ds = (s0 * (cal.u - 1.0), s0 * (cal.u - 1.0), s0 * (cal.d - 1.0), s0 * (cal.d - 1.0))

    def log_neg_utility(wealth: float, hedge: float, payoff) -> float:
        # log(-E[U]) via shifted log-sum-exp over the four terminal states.
        exponents = []
        for i in range(4):
            if log_p[i] is None:
                continue
            exponents.append(log_p[i] - gamma * (wealth + hedge * ds[i] + payoff[i]))
        m = max(exponents)
        total = sum(math.exp(e - m) for e in exponents)
        # Marginally signed weights (relaxed calibrations) enter directly.
        for i, p in signed:
            if p != 0.0:
                total += p * math.exp(-gamma * (wealth + hedge * ds[i] + payoff[i]) - m)
        if total <= 0.0:
            raise ValueError("expected utility undefined for signed branch weights")
        return m + math.log(total)

    def maximize_utility(wealth: float, payoff) -> float:
        # Bracket geometrically from the wealth scale, then golden section.
        f = lambda hedge: log_neg_utility(wealth, hedge, payoff)
        width = max(1.0, abs(xh), abs(xl)) / (gamma * s0 * (cal.u - cal.d))
        centre = f(0.0)
        for _ in range(200):
            if f(-width) > centre and f(width) > centre:
                break
            width *= 2.0
        else:
            raise BracketFailure("could not bracket the optimal hedge")
        lo, hi = -width, width
        c = hi - _GOLD * (hi - lo)
        d = lo + _GOLD * (hi - lo)
        fc, fd = f(c), f(d)
        while hi - lo > 1e-12:
            if fc < fd:
                hi, d, fd = d, c, fc
                c = hi - _GOLD * (hi - lo)
                fc = f(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + _GOLD * (hi - lo)
                fd = f(d)
        return f(0.5 * (lo + hi))

    zero = (0.0, 0.0, 0.0, 0.0)
    claim = (xh, xl, xh, xl)
    base = maximize_utility(x0, zero)

    def gap(price: float) -> float:
        # log(-u with claim at wealth x0 - price) - log(-u without claim);
        # strictly increasing in price, zero at the indifference price.
        return maximize_utility(x0 - price, claim) - base

    lo = min(xh, xl) - 1.0
    hi = max(xh, xl) + 1.0
    glo, ghi = gap(lo), gap(hi)
    for _ in range(100):
        if glo < 0.0 and ghi > 0.0:
            break
        if glo >= 0.0:
            lo -= hi - lo
            glo = gap(lo)
        if ghi <= 0.0:
            hi += hi - lo
            ghi = gap(hi)
    else:
        raise BracketFailure("could not bracket the indifference price")
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
