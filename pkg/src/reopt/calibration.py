"""Two-factor binomial lattice calibration.

Maps a pair of correlated geometric diffusions (a traded asset and a
non-traded project value, both expressed in units of the riskless cash
account) onto a one-period lattice with four joint states:

    (up, up)   with probability p1      traded up,   project up
    (up, dn)   with probability p2      traded up,   project down
    (dn, up)   with probability p3      traded down, project up
    (dn, dn)   with probability p4      traded down, project down

The multipliers are the usual exponential choices u = exp(sigma1*sqrt(dt)),
h = exp(sigma2*sqrt(dt)) with d = 1/u and l = 1/h.  The probabilities are
the unique solution of the moment conditions

    p1 + p2 = a := (exp((mu1 - r) dt) - d) / (u - d)
    p1 + p3 = b := (exp((mu2 - r) dt) - l) / (h - l)
    p1 + p2 + p3 + p4 = 1
    (u - d)(h - l)(p1 p4 - p2 p3) = rho sigma1 sigma2 dt

Because p1 p4 - p2 p3 = p1 - a b whenever the probabilities sum to one,
the system is linear and the solution is closed form.  The one-period
means of S1/S0 and V1/V0 and their covariance are then matched exactly;
the variances are matched to first order in dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CalibrationInfeasible",
    "MarketParams",
    "LatticeCalibration",
    "MomentReport",
    "calibrate",
    "verify_moments",
    "capm_equilibrium_rate",
    "mu2_from_shortfall",
]

_FIELDS = ("mu1", "sigma1", "mu2", "sigma2", "rho", "r", "s0", "v0")

# Containers tolerate this much structural slack (floating point dust plus
# deliberately signed probability vectors produced by calibrate(p_tol=...)).
_CONTAINER_P_SLACK = 1e-3
_SUM_TOL = 1e-9


class CalibrationInfeasible(ValueError):
    """No admissible probability vector matches the requested moments."""


@dataclass(frozen=True)
class MarketParams:
    """Continuous-time market description.

    Drifts and the riskless rate are per year, volatilities per
    square-root year.  ``rho`` is the instantaneous correlation between
    the traded asset and the project value.
    """

    mu1: float
    sigma1: float
    mu2: float
    sigma2: float
    rho: float
    r: float
    s0: float = 1.0
    v0: float = 1.0

    def __post_init__(self):
        for name in _FIELDS:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.sigma1 <= 0.0 or self.sigma2 <= 0.0:
            raise ValueError("sigma1 and sigma2 must be positive")
        if self.s0 <= 0.0 or self.v0 <= 0.0:
            raise ValueError("s0 and v0 must be positive")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [-1, 1]")


@dataclass(frozen=True)
class LatticeCalibration:
    """One-period lattice parameters.

    ``q = (1 - d) / (u - d)`` is the risk-neutral up-probability of the
    traded asset.  ``r`` is carried along so downstream consumers can
    convert between discounted and spot quantities without re-threading
    the market description.

    The container enforces structural invariants (multiplier ordering,
    reciprocal pairs, branch masses, probability sum) but deliberately
    admits probability entries on the boundary of [0, 1] and tiny signed
    excursions: degenerate complete-market lattices (p2 = p3 = 0) and
    marginally infeasible calibrations accepted via ``calibrate(p_tol=...)``
    are representable.  Strict open-interval feasibility is the job of
    :func:`calibrate`.
    """

    u: float
    d: float
    h: float
    l: float
    p1: float
    p2: float
    p3: float
    p4: float
    q: float
    dt: float
    r: float

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive and finite")
        if not (0.0 < self.d < 1.0 < self.u):
            raise ValueError("require 0 < d < 1 < u")
        if not (0.0 < self.l < 1.0 < self.h):
            raise ValueError("require 0 < l < 1 < h")
        if abs(self.u * self.d - 1.0) > 1e-12 or abs(self.h * self.l - 1.0) > 1e-12:
            raise ValueError("u*d and h*l must equal 1")
        ps = (self.p1, self.p2, self.p3, self.p4)
        if any(not math.isfinite(p) for p in ps):
            raise ValueError("probabilities must be finite")
        if any(p < -_CONTAINER_P_SLACK or p > 1.0 + _CONTAINER_P_SLACK for p in ps):
            raise ValueError("probabilities are outside the admissible range")
        if abs(sum(ps) - 1.0) > _SUM_TOL:
            raise ValueError("probabilities must sum to 1")
        if self.p1 + self.p2 <= 0.0 or self.p3 + self.p4 <= 0.0:
            raise ValueError("each traded-asset branch needs positive mass")
        if abs(self.q - (1.0 - self.d) / (self.u - self.d)) > 1e-12:
            raise ValueError("q must equal (1 - d)/(u - d)")
        if not (0.0 < self.q < 1.0):
            raise ValueError("q must lie in (0, 1)")
        if not math.isfinite(self.r):
            raise ValueError("r must be finite")

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.p3, self.p4])

    def is_strictly_feasible(self) -> bool:
        """True when every probability lies strictly inside (0, 1)."""
        return all(0.0 < p < 1.0 for p in self.probabilities)


def calibrate(market: MarketParams, dt: float, p_tol: float = 0.0) -> LatticeCalibration:
    """Solve the one-period moment-matching equations for the given step.

    Parameters
    ----------
    market : MarketParams
        Continuous-time parameters to match.
    dt : float
        Time step in years, positive.
    p_tol : float, optional
        Feasibility slack.  With the default 0.0 every probability must
        lie strictly inside (0, 1) and boundary-touching solutions are
        rejected (never clamped, which would silently change the matched
        moments).  A small positive value admits the exact moment-matched
        solution even when one entry undershoots 0 or overshoots 1 by at
        most ``p_tol``; the vector is then a signed measure and the
        moments remain exact.  Intended for configurations sitting just
        outside the feasibility boundary, e.g. |rho| near 1 with a time
        step slightly too coarse.

    Raises
    ------
    CalibrationInfeasible
        If a branch mass or a probability falls outside the admissible
        range, which signals that dt is too large or |rho| too extreme
        for the given drifts.
    """
    if not (math.isfinite(dt) and dt > 0.0):
        raise ValueError("dt must be positive and finite")
    if p_tol < 0.0:
        raise ValueError("p_tol must be nonnegative")

    sq = math.sqrt(dt)
    u = math.exp(market.sigma1 * sq)
    d = 1.0 / u
    h = math.exp(market.sigma2 * sq)
    l = 1.0 / h

    a = (math.exp((market.mu1 - market.r) * dt) - d) / (u - d)
    b = (math.exp((market.mu2 - market.r) * dt) - l) / (h - l)
    if not (0.0 < a < 1.0):
        raise CalibrationInfeasible(
            f"traded-asset branch mass a={a:.6g} outside (0, 1); dt too large"
        )
    if not (0.0 < b < 1.0):
        raise CalibrationInfeasible(
            f"project branch mass b={b:.6g} outside (0, 1); dt too large"
        )

    p1 = a * b + market.rho * market.sigma1 * market.sigma2 * dt / ((u - d) * (h - l))
    p2 = a - p1
    p3 = b - p1
    p4 = 1.0 - a - b + p1

    lo, hi = -p_tol, 1.0 + p_tol
    for name, p in (("p1", p1), ("p2", p2), ("p3", p3), ("p4", p4)):
        inside = (lo < p < hi) if p_tol > 0.0 else (0.0 < p < 1.0)
        if not inside:
            raise CalibrationInfeasible(
                f"{name}={p:.6g} outside (0, 1); dt too large or |rho| too "
                f"extreme for the given drifts"
            )

    q = (1.0 - d) / (u - d)
    return LatticeCalibration(
        u=u, d=d, h=h, l=l, p1=p1, p2=p2, p3=p3, p4=p4, q=q, dt=dt, r=market.r
    )


@dataclass(frozen=True)
class MomentReport:
    """Exact one-period lattice moments next to their continuous targets."""

    mean_traded: float
    mean_project: float
    covariance: float
    target_mean_traded: float
    target_mean_project: float
    target_covariance: float

    @property
    def mean_traded_error(self) -> float:
        return self.mean_traded - self.target_mean_traded

    @property
    def mean_project_error(self) -> float:
        return self.mean_project - self.target_mean_project

    @property
    def covariance_error(self) -> float:
        return self.covariance - self.target_covariance


def verify_moments(cal: LatticeCalibration, market: MarketParams) -> MomentReport:
    """Recompute E[S1/S0], E[V1/V0] and their covariance over the four states.

    This is a direct expectation over the joint states, independent of the
    closed-form solution path, so it doubles as a self-check: the mean and
    covariance deviations are zero to machine precision by construction.
    """
    p = cal.probabilities
    x = np.array([cal.u, cal.u, cal.d, cal.d])
    y = np.array([cal.h, cal.l, cal.h, cal.l])
    mean_x = float(p @ x)
    mean_y = float(p @ y)
    cov = float(p @ (x * y)) - mean_x * mean_y
    return MomentReport(
        mean_traded=mean_x,
        mean_project=mean_y,
        covariance=cov,
        target_mean_traded=math.exp((market.mu1 - market.r) * cal.dt),
        target_mean_project=math.exp((market.mu2 - market.r) * cal.dt),
        target_covariance=market.rho * market.sigma1 * market.sigma2 * cal.dt,
    )


def capm_equilibrium_rate(market: MarketParams) -> float:
    """Equilibrium expected return of the project given its market beta.

    Returns ``r + rho * (mu1 - r) / sigma1 * sigma2``.  The ``mu2`` field
    of ``market`` plays no role here.
    """
    return market.r + market.rho * (market.mu1 - market.r) / market.sigma1 * market.sigma2


def mu2_from_shortfall(market: MarketParams, delta: float) -> float:
    """Project drift implied by a below-equilibrium rate-of-return shortfall.

    ``delta`` is the gap between the equilibrium return and the actual
    project drift, the incomplete-market analogue of a dividend yield.
    The ``mu2`` field of ``market`` is ignored; parameter studies that
    hold ``delta`` fixed while varying ``rho`` recompute ``mu2`` through
    this function at every point.
    """
    if not math.isfinite(delta):
        raise ValueError("delta must be finite")
    return capm_equilibrium_rate(market) - delta
