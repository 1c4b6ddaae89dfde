"""Parameter-study harness: configs, sweeps, figure presets, CSV output.

A single JSON document resolves to a full parameter set (market, project,
option, grid).  Exactly one of the project drift ``mu2`` or the
rate-of-return shortfall ``delta`` is given; the other is derived through
the equilibrium relation.  Sweeps vary one parameter at a time; when the
project was specified through ``delta``, sweeps over ``rho`` or ``delta``
re-derive ``mu2`` at every point so that the shortfall stays fixed.

Named presets rebuild the standard parameter studies (threshold versus
correlation, risk aversion, volatility, shortfall and maturity, plus the
value-curve pair) on the base parameter set I = 1, r = 0.04, T = 10,
mu1 = 0.115, sigma1 = 0.25, S0 = V0 = 1, sigma2 = 0.2, delta = 0.04,
dt = 1/900.

Sweep points are independent pure computations; they can run on a worker
pool and the output is deterministic regardless of the worker count
(results are reassembled in submission order).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .calibration import (
    CalibrationInfeasible,
    MarketParams,
    calibrate,
    capm_equilibrium_rate,
    mu2_from_shortfall,
    verify_moments,
)
from .lattice import (
    OptionSpec,
    ThresholdCurve,
    backward_induce,
    build_grid,
    choose_half_height,
    extract_thresholds,
    value_curve,
)

__all__ = [
    "ConfigError",
    "RunConfig",
    "SweepSpec",
    "RunResult",
    "parse_config",
    "config_hash",
    "run_single",
    "run_sweep",
    "run_preset",
    "preset_names",
    "build_preset",
    "write_sweep_csv",
    "read_sweep_csv",
    "write_threshold_curve_csv",
    "write_value_curve_csv",
    "SWEEP_COLUMNS",
]

BASE_DT = 1.0 / 900.0

_SWEEPABLE = ("rho", "gamma", "sigma2", "delta", "maturity")
_OUTPUTS = ("threshold_at_t0", "threshold_curve", "value_curve")

SWEEP_COLUMNS = [
    "swept_name",
    "swept_value",
    "rho",
    "gamma",
    "sigma2",
    "delta",
    "maturity",
    "dt",
    "M",
    "N",
    "threshold_spot_t0",
    "option_value_v0",
    "anomaly_flags",
    "wall_ms",
]

THRESHOLD_CURVE_COLUMNS = [
    "n",
    "t",
    "time_to_maturity",
    "threshold_discounted",
    "threshold_spot",
    "resolution_halfwidth",
]

VALUE_CURVE_COLUMNS = ["V_spot", "option_value", "exercise_value"]


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending field."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters for one valuation."""

    market: MarketParams
    option: OptionSpec
    dt: float
    delta: float
    delta_fixed: bool = True
    m_override: int | None = None
    p_tol: float = 0.0

    def as_dict(self) -> dict[str, Any]:
        m, o = self.market, self.option
        return {
            "market": {"mu1": m.mu1, "sigma1": m.sigma1, "s0": m.s0, "v0": m.v0, "r": m.r},
            "project": {"mu2": m.mu2, "sigma2": m.sigma2, "rho": m.rho, "delta": self.delta},
            "option": {
                "cost": o.cost,
                "cost_growth": o.cost_growth,
                "maturity": o.maturity,
                "gamma": o.gamma,
            },
            "grid": {"dt": self.dt, "m_override": self.m_override, "p_tol": self.p_tol},
        }


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter study around a resolved base configuration."""

    name: str
    values: tuple[float, ...]
    base: RunConfig
    outputs: tuple[str, ...] = ("threshold_at_t0",)
    emit_per_step_curve: bool = False

    def __post_init__(self):
        if self.name not in _SWEEPABLE:
            raise ConfigError(f"sweep.name must be one of {_SWEEPABLE}, got {self.name!r}")
        for out in self.outputs:
            if out not in _OUTPUTS:
                raise ConfigError(f"sweep output {out!r} not in {_OUTPUTS}")
        for v in self.values:
            _check_domain(self.name, v, f"sweep.values[{self.name}]")


@dataclass
class RunResult:
    """Outcome of one valuation, carrying the full resolved parameter set."""

    swept_name: str
    swept_value: float
    rho: float
    gamma: float
    sigma2: float
    delta: float
    maturity: float
    dt: float
    m: int
    n: int
    threshold_spot_t0: float = math.nan
    option_value_v0: float = math.nan
    anomaly_flags: str = ""
    wall_ms: float = math.nan
    error: str = ""
    threshold_curve: ThresholdCurve | None = None
    value_points: np.ndarray | None = None


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------


def _get(section: dict, key: str, path: str, default=None, required=False):
    if key in section:
        return section[key]
    if required:
        raise ConfigError(f"missing required field {path}")
    return default


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number, got {value!r}")
    if not math.isfinite(float(value)):
        raise ConfigError(f"{path} must be finite")
    return float(value)


def _check_domain(name: str, value: float, path: str) -> None:
    if name == "rho" and not -1.0 <= value <= 1.0:
        raise ConfigError(f"{path}: rho must lie in [-1, 1], got {value}")
    if name in ("gamma", "sigma2", "maturity", "sigma1", "cost", "dt", "s0", "v0") and value <= 0.0:
        raise ConfigError(f"{path}: {name} must be positive, got {value}")


def parse_config(text: str) -> tuple[RunConfig, SweepSpec | None]:
    """Resolve a JSON configuration into a RunConfig and optional sweep.

    Defaults mirror the base parameter study, so a minimal document needs
    only ``project.rho`` and ``option.gamma``.  Exactly one of
    ``project.mu2`` and ``project.delta`` may be given (both only if
    consistent); the missing one is derived through the equilibrium
    relation and echoed in the result rows.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a JSON object")

    missing = []
    project = raw.get("project", {})
    option_sec = raw.get("option", {})
    if "rho" not in project:
        missing.append("project.rho")
    if "gamma" not in option_sec:
        missing.append("option.gamma")
    if missing:
        raise ConfigError("missing required fields: " + ", ".join(missing))

    known = {"market", "project", "option", "grid", "sweep"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown top-level section {key!r}")

    market_sec = raw.get("market", {})
    mu1 = _number(_get(market_sec, "mu1", "market.mu1", 0.115), "market.mu1")
    sigma1 = _number(_get(market_sec, "sigma1", "market.sigma1", 0.25), "market.sigma1")
    s0 = _number(_get(market_sec, "s0", "market.s0", 1.0), "market.s0")
    v0 = _number(_get(market_sec, "v0", "market.v0", 1.0), "market.v0")
    r = _number(_get(market_sec, "r", "market.r", 0.04), "market.r")
    _check_domain("sigma1", sigma1, "market.sigma1")
    _check_domain("s0", s0, "market.s0")
    _check_domain("v0", v0, "market.v0")

    rho = _number(project["rho"], "project.rho")
    _check_domain("rho", rho, "project.rho")
    sigma2 = _number(_get(project, "sigma2", "project.sigma2", 0.2), "project.sigma2")
    _check_domain("sigma2", sigma2, "project.sigma2")

    has_mu2 = "mu2" in project
    has_delta = "delta" in project
    shell = MarketParams(
        mu1=mu1, sigma1=sigma1, mu2=0.0, sigma2=sigma2, rho=rho, r=r, s0=s0, v0=v0
    )
    if has_mu2 and has_delta:
        mu2 = _number(project["mu2"], "project.mu2")
        delta = _number(project["delta"], "project.delta")
        implied = mu2_from_shortfall(shell, delta)
        if abs(implied - mu2) > 1e-12:
            raise ConfigError(
                f"project.mu2={mu2} and project.delta={delta} are inconsistent "
                f"(delta implies mu2={implied})"
            )
        delta_fixed = True
    elif has_mu2:
        mu2 = _number(project["mu2"], "project.mu2")
        delta = capm_equilibrium_rate(shell) - mu2
        delta_fixed = False
    else:
        delta = _number(_get(project, "delta", "project.delta", 0.04), "project.delta")
        mu2 = mu2_from_shortfall(shell, delta)
        delta_fixed = True
    market = replace(shell, mu2=mu2)

    cost = _number(_get(option_sec, "cost", "option.cost", 1.0), "option.cost")
    cost_growth = _number(
        _get(option_sec, "cost_growth", "option.cost_growth", 0.0), "option.cost_growth"
    )
    maturity = _number(_get(option_sec, "maturity", "option.maturity", 10.0), "option.maturity")
    gamma = _number(option_sec["gamma"], "option.gamma")
    _check_domain("cost", cost, "option.cost")
    _check_domain("maturity", maturity, "option.maturity")
    _check_domain("gamma", gamma, "option.gamma")
    option = OptionSpec(cost=cost, maturity=maturity, gamma=gamma, cost_growth=cost_growth)

    grid_sec = raw.get("grid", {})
    dt = _number(_get(grid_sec, "dt", "grid.dt", BASE_DT), "grid.dt")
    _check_domain("dt", dt, "grid.dt")
    m_override = _get(grid_sec, "m_override", "grid.m_override")
    if m_override is not None:
        if not isinstance(m_override, int) or isinstance(m_override, bool) or m_override < 1:
            raise ConfigError("grid.m_override must be a positive integer")
    p_tol = _number(_get(grid_sec, "p_tol", "grid.p_tol", 0.0), "grid.p_tol")
    if p_tol < 0.0:
        raise ConfigError("grid.p_tol must be nonnegative")

    base = RunConfig(
        market=market,
        option=option,
        dt=dt,
        delta=delta,
        delta_fixed=delta_fixed,
        m_override=m_override,
        p_tol=p_tol,
    )

    sweep = None
    if "sweep" in raw:
        sweep_sec = raw["sweep"]
        name = _get(sweep_sec, "name", "sweep.name", required=True)
        if "values" in sweep_sec:
            values = tuple(
                _number(v, f"sweep.values[{i}]") for i, v in enumerate(sweep_sec["values"])
            )
        elif "range" in sweep_sec:
            rng = sweep_sec["range"]
            start = _number(_get(rng, "start", "sweep.range.start", required=True), "sweep.range.start")
            stop = _number(_get(rng, "stop", "sweep.range.stop", required=True), "sweep.range.stop")
            count = _get(rng, "count", "sweep.range.count", required=True)
            if not isinstance(count, int) or isinstance(count, bool) or count < 1:
                raise ConfigError("sweep.range.count must be a positive integer")
            values = tuple(np.linspace(start, stop, count).tolist())
        else:
            raise ConfigError("sweep needs either values or range")
        outputs = tuple(_get(sweep_sec, "outputs", "sweep.outputs", ("threshold_at_t0",)))
        emit = bool(_get(sweep_sec, "per_step_curve", "sweep.per_step_curve", False))
        sweep = SweepSpec(name=name, values=values, base=base, outputs=outputs,
                          emit_per_step_curve=emit)

    return base, sweep


def config_hash(cfg: RunConfig, sweep: SweepSpec | None = None) -> str:
    """Stable hash of the fully resolved parameter set."""
    payload = cfg.as_dict()
    if sweep is not None:
        payload["sweep"] = {
            "name": sweep.name,
            "values": list(sweep.values),
            "outputs": list(sweep.outputs),
            "per_step_curve": sweep.emit_per_step_curve,
        }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


def _point_config(spec: SweepSpec, value: float) -> RunConfig:
    """Resolve the configuration at one swept value.

    With a shortfall-specified project, changing rho, delta or sigma2
    moves the equilibrium rate, so mu2 is re-derived to keep delta fixed;
    a drift-specified project instead holds mu2 and lets delta float.
    """
    cfg = spec.base
    market, option, delta = cfg.market, cfg.option, cfg.delta
    if spec.name == "gamma":
        option = replace(option, gamma=value)
    elif spec.name == "maturity":
        option = replace(option, maturity=value)
    else:
        if spec.name == "rho":
            market = replace(market, rho=value)
        elif spec.name == "sigma2":
            market = replace(market, sigma2=value)
        elif spec.name == "delta":
            delta = value
        if cfg.delta_fixed:
            market = replace(market, mu2=mu2_from_shortfall(market, delta))
        else:
            delta = capm_equilibrium_rate(market) - market.mu2
    return replace(cfg, market=market, option=option, delta=delta)


def run_single(
    cfg: RunConfig,
    outputs: tuple[str, ...] = ("threshold_at_t0",),
    swept_name: str = "",
    swept_value: float = math.nan,
) -> RunResult:
    """Build, induce and summarize one lattice; errors become result rows."""
    market, option = cfg.market, cfg.option
    n_steps = max(1, int(round(option.maturity / cfg.dt)))
    m = cfg.m_override if cfg.m_override is not None else choose_half_height(
        market, option, option.maturity / n_steps
    )
    result = RunResult(
        swept_name=swept_name,
        swept_value=swept_value,
        rho=market.rho,
        gamma=option.gamma,
        sigma2=market.sigma2,
        delta=cfg.delta,
        maturity=option.maturity,
        dt=option.maturity / n_steps,
        m=m,
        n=n_steps,
    )
    start = time.perf_counter()
    try:
        grid = build_grid(market, option, n_steps, m, cfg.p_tol)
        cal = calibrate(market, grid.dt, cfg.p_tol)
        vg = backward_induce(grid, cal, option)
        curve = extract_thresholds(vg, grid, option)
    except (CalibrationInfeasible, ValueError) as exc:
        result.wall_ms = (time.perf_counter() - start) * 1e3
        result.error = f"{type(exc).__name__}: {exc}"
        result.anomaly_flags = f"error:{type(exc).__name__}"
        return result
    result.wall_ms = (time.perf_counter() - start) * 1e3
    result.threshold_spot_t0 = curve.spot_t0
    result.option_value_v0 = float(vg.values_t0[grid.half_height])
    flags = []
    if int(vg.anomalous.sum()):
        flags.append(f"anomalous_columns={int(vg.anomalous.sum())}")
    if int(vg.no_exercise.sum()):
        flags.append(f"no_exercise_columns={int(vg.no_exercise.sum())}")
    result.anomaly_flags = ";".join(flags)
    if "threshold_curve" in outputs:
        result.threshold_curve = curve
    if "value_curve" in outputs:
        result.value_points = np.column_stack(
            (
                value_curve(vg, grid, 0),
                np.maximum(grid.row_values - option.cost, 0.0),
            )
        )
    return result


def _sweep_point(args: tuple[SweepSpec, float, tuple[str, ...]]) -> RunResult:
    spec, value, outputs = args
    return run_single(_point_config(spec, value), outputs, spec.name, value)


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[RunResult]:
    """Run every swept value; per-point failures become error rows.

    Points are independent, so with ``workers > 1`` they execute on a
    process pool.  Results come back ordered by swept value regardless
    of scheduling, and the numbers are identical for any worker count.

    ``emit_per_step_curve`` on a maturity sweep additionally attaches the
    per-time-step threshold curve of the longest-maturity lattice, the
    single-lattice counterpart of the per-T readings.
    """
    jobs = []
    curve_at = max(spec.values) if (spec.emit_per_step_curve and spec.values) else None
    for v in sorted(spec.values):
        outputs = spec.outputs
        if spec.name == "maturity" and v == curve_at and "threshold_curve" not in outputs:
            outputs = outputs + ("threshold_curve",)
        jobs.append((spec, v, outputs))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(job) for job in jobs]


# ---------------------------------------------------------------------------
# figure presets
# ---------------------------------------------------------------------------


def _base_config(rho: float, gamma: float, dt: float, **overrides) -> RunConfig:
    doc: dict[str, Any] = {
        "project": {"rho": rho},
        "option": {"gamma": gamma},
        "grid": {"dt": dt},
    }
    for path, value in overrides.items():
        section, key = path.split(".")
        doc.setdefault(section, {})[key] = value
    cfg, _ = parse_config(json.dumps(doc))
    return cfg


def build_preset(name: str, dt: float | None = None) -> list[SweepSpec]:
    """Materialize one of the named figure presets as sweep specs.

    fig1-left   threshold vs correlation at gamma = 1
    fig1-right  threshold vs risk aversion at rho in {0, 0.5, 0.9}
    fig2-left   threshold vs project volatility
    fig2-right  threshold vs shortfall rate
    fig3        threshold vs maturity at (gamma, rho) pairs
    fig4        time-0 value curves and thresholds at rho in {0, 0.99},
                gamma = 10 (the risk aversion that reproduces the
                published threshold pair 1.1972 / 1.7507)

    ``dt`` overrides the default step 1/900, e.g. for quick runs.
    """
    step = BASE_DT if dt is None else dt
    if name == "fig1-left":
        rhos = tuple(np.linspace(-0.99, 0.99, 21).tolist())
        return [SweepSpec("rho", rhos, _base_config(0.0, 1.0, step))]
    if name == "fig1-right":
        gammas = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)
        return [
            SweepSpec("gamma", gammas, _base_config(rho, 1.0, step))
            for rho in (0.0, 0.5, 0.9)
        ]
    if name == "fig2-left":
        return [SweepSpec("sigma2", (0.1, 0.15, 0.2, 0.25, 0.3), _base_config(0.5, 1.0, step))]
    if name == "fig2-right":
        return [SweepSpec("delta", (0.02, 0.04, 0.06, 0.08), _base_config(0.5, 1.0, step))]
    if name == "fig3":
        maturities = (1.0, 2.0, 5.0, 10.0, 20.0, 40.0)
        return [
            SweepSpec("maturity", maturities, _base_config(rho, gamma, step))
            for gamma, rho in ((0.01, 0.9), (1.0, 0.5), (10.0, 0.0))
        ]
    if name == "fig4":
        return [
            SweepSpec(
                "rho",
                (0.0, 0.99),
                _base_config(0.0, 10.0, step),
                outputs=("threshold_at_t0", "value_curve"),
            )
        ]
    raise ConfigError(f"unknown preset {name!r}")


def preset_names() -> tuple[str, ...]:
    return ("fig1-left", "fig1-right", "fig2-left", "fig2-right", "fig3", "fig4")


def run_preset(name: str, workers: int = 1, dt: float | None = None) -> list[RunResult]:
    results: list[RunResult] = []
    for spec in build_preset(name, dt):
        results.extend(run_sweep(spec, workers=workers))
    return results


def preset_hash(name: str, dt: float | None = None) -> str:
    specs = build_preset(name, dt)
    blob = json.dumps(
        [config_hash(s.base, s) for s in specs], sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return f"{v:.17g}"


def _write_rows(path, comment: str, header: list[str], rows) -> None:
    buf = io.StringIO()
    buf.write(comment + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def write_sweep_csv(results: list[RunResult], path, cfg_hash: str) -> None:
    """Write sweep results; numbers carry 17 significant digits so a
    re-parse recovers them bit-exactly."""
    rows = (
        [
            res.swept_name,
            res.swept_value,
            res.rho,
            res.gamma,
            res.sigma2,
            res.delta,
            res.maturity,
            res.dt,
            res.m,
            res.n,
            res.threshold_spot_t0,
            res.option_value_v0,
            res.anomaly_flags,
            res.wall_ms,
        ]
        for res in results
    )
    _write_rows(path, f"# config_sha256={cfg_hash}", SWEEP_COLUMNS, rows)


def read_sweep_csv(path) -> tuple[str, list[dict[str, str]]]:
    """Read back a sweep CSV: (config hash, rows as string dicts)."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# config_sha256="):
            raise ValueError(f"{path}: missing config hash comment")
        root = first.split("=", 1)[1]
        reader = csv.DictReader(fh)
        return root, list(reader)


def write_threshold_curve_csv(curve: ThresholdCurve, path, cfg_hash: str) -> None:
    rows = (
        [
            int(curve.n[i]),
            curve.t[i],
            curve.time_to_maturity[i],
            curve.threshold_discounted[i],
            curve.threshold_spot[i],
            curve.resolution_halfwidth[i],
        ]
        for i in range(len(curve.n))
    )
    _write_rows(path, f"# config_sha256={cfg_hash}", THRESHOLD_CURVE_COLUMNS, rows)


def write_value_curve_csv(points: np.ndarray, path, cfg_hash: str) -> None:
    """Points are rows of (V_spot, option_value, exercise_value)."""
    _write_rows(path, f"# config_sha256={cfg_hash}", VALUE_CURVE_COLUMNS, points)


def moment_report_text(cfg: RunConfig) -> str:
    """Human-readable calibration + moment check for one configuration."""
    cal = calibrate(cfg.market, cfg.dt, cfg.p_tol)
    rep = verify_moments(cal, cfg.market)
    lines = [
        f"dt        = {cal.dt:.10g}",
        f"u, d      = {cal.u:.10g}, {cal.d:.10g}",
        f"h, l      = {cal.h:.10g}, {cal.l:.10g}",
        f"q         = {cal.q:.10g}",
        f"p         = ({cal.p1:.10g}, {cal.p2:.10g}, {cal.p3:.10g}, {cal.p4:.10g})",
        f"sum p - 1 = {cal.p1 + cal.p2 + cal.p3 + cal.p4 - 1.0:.3e}",
        f"E[S1/S0]  = {rep.mean_traded:.12g}  (target {rep.target_mean_traded:.12g}, "
        f"error {rep.mean_traded_error:.3e})",
        f"E[V1/V0]  = {rep.mean_project:.12g}  (target {rep.target_mean_project:.12g}, "
        f"error {rep.mean_project_error:.3e})",
        f"Cov       = {rep.covariance:.12g}  (target {rep.target_covariance:.12g}, "
        f"error {rep.covariance_error:.3e})",
    ]
    return "\n".join(lines)
