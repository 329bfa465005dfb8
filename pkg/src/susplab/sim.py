"""Closed-loop quarter-car simulation, run metrics and scenario comparison.

The loop runs at the integration rate: each step the controller reads the
current state and the previous step's sprung acceleration, computes the
damper command, and holds it through one classic RK4 step. The road is
linearly interpolated between its samples.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from numba import njit
from scipy import signal

from .dynamics import (ACTIVE, SEMI_ACTIVE, I_FMAX, I_FMIN, NumericalDivergenceError,
                       SuspensionParams, _accelerations, static_equilibrium)
from .fuzzy import FuzzySystem, _mamdani
from .optim.baselines import BASELINE_CONFIGS, METHODS, baseline_minimize
from .optim.cfoa import CfoaConfig, cfoa_minimize
from .optim.zn import LtiPlant, zn_tune
from .pid import JudgmentWeights, PidGains, judgment
from .road import RoadProfile

__all__ = [
    "CHANNELS",
    "ComparisonRow",
    "ComparisonTable",
    "MODES",
    "Metrics",
    "Scenario",
    "SimConfig",
    "TimeSeries",
    "TunerSettings",
    "TuningProblem",
    "compute_metrics",
    "integrate_closed_loop",
    "linearized_plant",
    "run_comparison",
]

MODES = ("active", "semi_active_zero", "semi_active_fuzzy_pid")
_MODE_CODES = {"active": 0, "semi_active_zero": 1, "semi_active_fuzzy_pid": 2}
_ROUTES = {"damper": 0, "parallel": 1}
CHANNELS = ("time", "z_s", "z_u", "v_s", "v_u", "a_s", "distortion", "tire_load", "f_d", "u_pid")
DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    ``pid_route="damper"`` adds the PID output to the fuzzy command before
    the damper clamp; ``"parallel"`` keeps the damper on the fuzzy command
    alone and applies the PID output as an unconstrained force between the
    masses.
    """

    dt: float = 1e-3
    duration: float = 10.0
    velocity: float = 20.0
    mode: str = "semi_active_fuzzy_pid"
    equilibrium_start: bool = True
    pid_route: str = "damper"

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if not self.duration >= self.dt:
            raise ValueError("duration must be >= dt")
        if not self.velocity > 0:
            raise ValueError("velocity must be positive")
        if self.mode not in _MODE_CODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.pid_route not in _ROUTES:
            raise ValueError(f"pid_route must be one of {sorted(_ROUTES)}")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9))

    def replace(self, **changes) -> "SimConfig":
        return SimConfig(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Sampled closed-loop run. ``distortion`` is suspension travel measured
    from its static-equilibrium value; ``tire_load`` is the raw tire force."""

    time: np.ndarray
    z_s: np.ndarray
    z_u: np.ndarray
    v_s: np.ndarray
    v_u: np.ndarray
    a_s: np.ndarray
    distortion: np.ndarray
    tire_load: np.ndarray
    f_d: np.ndarray
    u_pid: np.ndarray
    mode: str = "semi_active_fuzzy_pid"

    def __len__(self):
        return self.time.size

    def __eq__(self, other):
        return (isinstance(other, TimeSeries) and self.mode == other.mode
                and all(np.array_equal(getattr(self, c), getattr(other, c)) for c in CHANNELS))

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise KeyError(name)
        return getattr(self, name)

    def to_csv(self, path) -> Path:
        path = Path(path)
        cols = [getattr(self, c) for c in CHANNELS]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CHANNELS)
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])
        return path

    @classmethod
    def from_csv(cls, path, mode: str = "semi_active_fuzzy_pid") -> "TimeSeries":
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != CHANNELS:
                raise ValueError(f"unexpected header {header!r}")
            data = np.array([[float(v) for v in row] for row in reader])
        return cls(*(data[:, i].copy() for i in range(len(CHANNELS))), mode=mode)


@dataclass(frozen=True)
class Metrics:
    peak_accel: float
    rms_accel: float
    peak_distortion: float
    rms_distortion: float
    tire_load_min: float
    tire_load_max: float
    settle_skip: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


METRIC_FIELDS = tuple(f.name for f in fields(Metrics) if f.name != "settle_skip")


@njit(cache=True, nogil=True)
def _road_at(road, road_dt, t):
    x = t / road_dt
    i = int(math.floor(x))
    if i >= road.size - 1:
        return road[road.size - 1]
    if i < 0:
        return road[0]
    w = x - i
    return road[i] * (1.0 - w) + road[i + 1] * w


@njit(cache=True, nogil=True)
def _deriv(p, x, z_g, plant_mode, f_d, f_extra):
    a_s, a_u, _, _, _ = _accelerations(p, x[0], x[1], x[2], x[3], z_g, plant_mode, f_d, f_extra)
    return np.array([x[1], a_s, x[3], a_u])


@njit(cache=True, nogil=True)
def _simulate(p, x0, d_eq, road, road_dt, dt, n_steps, mode, route, gains,
              mf, universes, rules, grid, out_mf, weights, out):
    """Fill ``out`` (n_steps + 1, 10); return the diverging step or -1."""
    plant_mode = 0 if mode == 0 else 1
    f_lo, f_hi = p[I_FMIN], p[I_FMAX]
    x = x0.copy()
    a_prev = 0.0
    integral = 0.0
    prev_e = 0.0
    xin = np.empty(3)
    for k in range(n_steps + 1):
        t = k * dt
        z_g = _road_at(road, road_dt, t)
        dev = x[0] - x[2] - d_eq
        f_d = 0.0
        u = 0.0
        f_extra = 0.0
        if mode == 2:
            xin[0] = x[1]
            xin[1] = a_prev
            xin[2] = abs(dev)
            u_fz, _ = _mamdani(xin, mf, universes, rules, grid, out_mf, weights)
            e = -dev
            integral += e * dt
            deriv = 0.0 if k == 0 else (e - prev_e) / dt
            prev_e = e
            u = gains[0] * e + gains[1] * integral + gains[2] * deriv
            if route == 0:
                f_d = min(max(u_fz + u, f_lo), f_hi)
            else:
                f_d = min(max(u_fz, f_lo), f_hi)
                f_extra = u
        a_s, a_u, f_tire, _, f_damper = _accelerations(p, x[0], x[1], x[2], x[3], z_g,
                                                       plant_mode, f_d, f_extra)
        out[k, 0] = t
        out[k, 1] = x[0]
        out[k, 2] = x[2]
        out[k, 3] = x[1]
        out[k, 4] = x[3]
        out[k, 5] = a_s
        out[k, 6] = dev
        out[k, 7] = f_tire
        out[k, 8] = f_damper if mode == 0 else f_d
        out[k, 9] = u
        a_prev = a_s
        bad = False
        for v in range(4):
            if not abs(x[v]) <= DIVERGENCE_LIMIT:
                bad = True
        if bad or not (abs(a_s) <= DIVERGENCE_LIMIT and abs(a_u) <= DIVERGENCE_LIMIT):
            return k
        if k == n_steps:
            break
        zg_mid = _road_at(road, road_dt, t + 0.5 * dt)
        zg_end = _road_at(road, road_dt, t + dt)
        k1 = _deriv(p, x, z_g, plant_mode, f_d, f_extra)
        k2 = _deriv(p, x + 0.5 * dt * k1, zg_mid, plant_mode, f_d, f_extra)
        k3 = _deriv(p, x + 0.5 * dt * k2, zg_mid, plant_mode, f_d, f_extra)
        k4 = _deriv(p, x + dt * k3, zg_end, plant_mode, f_d, f_extra)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return -1


_NO_GAINS = np.zeros(3)


def integrate_closed_loop(p: SuspensionParams, fuzzy: FuzzySystem | None, gains: PidGains | None,
                          road: RoadProfile, cfg: SimConfig) -> TimeSeries:
    """Simulate ``cfg.duration`` seconds over ``road``.

    ``fuzzy`` and ``gains`` are only used in ``semi_active_fuzzy_pid`` mode.
    Raises ``NumericalDivergenceError`` naming the step at which any state
    component leaves ``[-1e6, 1e6]``.
    """
    n = cfg.n_steps
    if road.dt > cfg.dt * (1 + 1e-9):
        raise ValueError(f"road sample interval {road.dt} is coarser than dt {cfg.dt}")
    if n * cfg.dt > road.duration * (1 + 1e-9) + 1e-12:
        raise ValueError(f"road covers {road.duration} s, simulation needs {n * cfg.dt} s")
    mode = _MODE_CODES[cfg.mode]
    plant_mode = ACTIVE if mode == 0 else SEMI_ACTIVE
    eq = static_equilibrium(p, 0.0, plant_mode)
    d_eq = eq.z_s - eq.z_u
    if cfg.equilibrium_start:
        z0 = float(road.samples[0])
        x0 = np.array([eq.z_s + z0, 0.0, eq.z_u + z0, 0.0])
    else:
        x0 = np.zeros(4)
    if mode == 2:
        if fuzzy is None or gains is None:
            raise ValueError("semi_active_fuzzy_pid needs a fuzzy system and PID gains")
        kargs = fuzzy.kernel_args
        g = gains.as_array()
    else:
        kargs = FuzzySystem.default().kernel_args if fuzzy is None else fuzzy.kernel_args
        g = _NO_GAINS
    out = np.empty((n + 1, len(CHANNELS)))
    bad = _simulate(p.to_vector(), x0, d_eq, np.ascontiguousarray(road.samples, dtype=float),
                    float(road.dt), float(cfg.dt), n, mode, _ROUTES[cfg.pid_route], g, *kargs, out)
    if bad >= 0:
        raise NumericalDivergenceError(
            f"state diverged at step {bad} (t = {bad * cfg.dt:.6g} s): {out[bad, 1:5].tolist()}")
    return TimeSeries(*(out[:, i].copy() for i in range(len(CHANNELS))), mode=cfg.mode)


def _rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def compute_metrics(ts: TimeSeries, settle_skip: float = 1.0) -> Metrics:
    """Peaks are max |x| and RMS over samples with ``t > settle_skip``."""
    keep = ts.time > settle_skip
    if not keep.any():
        raise ValueError(f"no samples after settle_skip = {settle_skip} s")
    a, d, tl = ts.a_s[keep], ts.distortion[keep], ts.tire_load[keep]
    return Metrics(float(np.max(np.abs(a))), _rms(a), float(np.max(np.abs(d))), _rms(d),
                   float(tl.min()), float(tl.max()), float(settle_skip))


# -- tuning ---------------------------------------------------------------

class TuningProblem:
    """Objective for the gain tuners: simulate ``weights.T`` seconds of the
    fuzzy-PID loop and score the distortion error with the judgment function.

    Unstable or diverging gains score ``inf``.
    """

    def __init__(self, p: SuspensionParams, fuzzy: FuzzySystem, road: RoadProfile,
                 sim: SimConfig, weights: JudgmentWeights = JudgmentWeights()):
        self.p = p
        self.fuzzy = fuzzy
        self.road = road
        self.weights = weights
        self.sim = sim.replace(duration=weights.T, mode="semi_active_fuzzy_pid")

    def __call__(self, gains: PidGains) -> float:
        try:
            ts = integrate_closed_loop(self.p, self.fuzzy, gains, self.road, self.sim)
        except NumericalDivergenceError:
            return math.inf
        return judgment(-ts.distortion, ts.u_pid, self.sim.dt, self.weights).j


def linearized_plant(p: SuspensionParams, dt: float = 1e-3, actuator_lag: float = 0.01,
                     horizon: float = 20.0) -> LtiPlant:
    """Transfer from a force pushing the masses apart to suspension travel,
    linearized at static equilibrium, in series with a first-order actuator
    lag. The lag gives the loop a phase crossover, so proportional feedback
    has a finite ultimate gain."""
    if not actuator_lag > 0:
        raise ValueError("actuator_lag must be positive")
    pv = p.to_vector()
    eq = static_equilibrium(p)
    x0 = np.array(eq, dtype=float)

    def f(x, u):
        a_s, a_u, *_ = _accelerations(pv, x[0], x[1], x[2], x[3], 0.0, 1, 0.0, u)
        return np.array([x[1], a_s, x[3], a_u])

    h = 1e-7
    a = np.empty((4, 4))
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        a[:, j] = (f(x0 + e, 0.0) - f(x0 - e, 0.0)) / (2 * h)
    b = ((f(x0, h) - f(x0, -h)) / (2 * h)).reshape(4, 1)
    c = np.array([[1.0, 0.0, -1.0, 0.0]])
    num, den = signal.ss2tf(a, b, c, np.zeros((1, 1)))
    num = np.trim_zeros(np.where(np.abs(num[0]) < 1e-12 * np.abs(num[0]).max(), 0.0, num[0]), "f")
    den = np.polymul(den, [actuator_lag, 1.0])
    return LtiPlant(num, den, dt, horizon)


# -- comparison -----------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """One comparison row. ``tuner`` is ``None``, ``"ZN"``, ``"CFOA"`` or a
    baseline method name; ``gains`` fixes the PID gains when no tuner runs."""

    label: str
    mode: str
    tuner: str | None = None
    gains: PidGains | None = None

    def __post_init__(self):
        if self.mode not in _MODE_CODES:
            raise ValueError(f"scenario {self.label!r}: unknown mode {self.mode!r}")
        valid = {None, "ZN", "CFOA", *METHODS}
        if self.tuner not in valid:
            raise ValueError(f"scenario {self.label!r}: unknown tuner {self.tuner!r}")
        if self.mode == "semi_active_fuzzy_pid" and self.tuner is None and self.gains is None:
            raise ValueError(f"scenario {self.label!r} needs a tuner or fixed gains")


@dataclass
class ComparisonRow:
    label: str
    mode: str
    tuner: str | None
    gains: PidGains | None = None
    metrics: Metrics | None = None
    deltas: dict = field(default_factory=dict)
    tuning_score: float | None = None
    tuning_evals: int = 0
    error: str | None = None
    series: TimeSeries | None = field(default=None, repr=False)
    history: np.ndarray | None = field(default=None, repr=False)

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class ComparisonTable:
    rows: list
    reference: str
    settle_skip: float

    def __len__(self):
        return len(self.rows)

    def row(self, label: str) -> ComparisonRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def _records(self):
        for r in self.rows:
            rec = {"label": r.label, "mode": r.mode, "tuner": r.tuner or "",
                   "status": "failed" if r.failed else "ok"}
            g = r.gains.to_dict() if r.gains else {"kp": "", "ki": "", "kd": ""}
            rec.update(g)
            for name in METRIC_FIELDS:
                rec[name] = getattr(r.metrics, name) if r.metrics else ""
            for name in METRIC_FIELDS:
                rec[f"{name}_delta_pct"] = r.deltas.get(name, "")
            rec["settle_skip"] = self.settle_skip
            rec["error"] = r.error or ""
            yield rec

    def to_csv(self, path) -> Path:
        path = Path(path)
        records = list(self._records())
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(records[0]), lineterminator="\n")
            w.writeheader()
            for rec in records:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.items()})
        return path

    def render(self) -> str:
        """Aligned text table of metrics with percentage deltas vs. the reference."""
        head = ["scenario", *METRIC_FIELDS]
        lines = [[h for h in head]]
        for r in self.rows:
            if r.failed:
                lines.append([r.label, *(["failed"] + [""] * (len(METRIC_FIELDS) - 1))])
                continue
            cells = [r.label]
            for name in METRIC_FIELDS:
                v = getattr(r.metrics, name)
                d = r.deltas.get(name)
                cells.append(f"{v:.4g}" if d is None or r.label == self.reference
                             else f"{v:.4g} ({d:+.1f}%)")
            lines.append(cells)
        widths = [max(len(row[i]) for row in lines) for i in range(len(head))]
        out = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in lines]
        out.append(f"reference: {self.reference}; metrics over t > {self.settle_skip:g} s")
        return "\n".join(out)


@dataclass(frozen=True)
class TunerSettings:
    """Budgets and hyperparameters shared by the tuned scenarios.

    ``gain_scale`` overrides the scale in every tuner config so all methods
    search the same gain box. CFOA's budget is ``pop_size * (max_iter + 1)``;
    the other metaheuristics get ``budget`` evaluations.
    """

    budget: int = 300
    gain_scale: tuple = (100.0, 100.0, 10.0)
    cfoa: CfoaConfig = CfoaConfig(pop_size=10, max_iter=29)
    baselines: dict = field(default_factory=dict)
    weights: JudgmentWeights = JudgmentWeights()
    zn_actuator_lag: float = 0.01
    seed: int = 0


def _tune(sc: Scenario, problem: TuningProblem, p: SuspensionParams, sim: SimConfig,
          settings: TunerSettings):
    if sc.tuner == "ZN":
        return zn_tune(linearized_plant(p, sim.dt, settings.zn_actuator_lag), 1e-2, 1e7)
    scale = tuple(settings.gain_scale)
    if sc.tuner == "CFOA":
        cfg = CfoaConfig(**{**settings.cfoa.to_dict(), "seed": settings.seed, "gain_scale": scale})
        return cfoa_minimize(problem, cfg)
    cfg = settings.baselines.get(sc.tuner) or BASELINE_CONFIGS[sc.tuner]()
    cfg = type(cfg)(**{**cfg.to_dict(), "gain_scale": scale})
    return baseline_minimize(sc.tuner, problem, settings.budget, settings.seed, cfg)


def _run_row(sc, p, fuzzy, road, sim, problem, settings, settle_skip):
    row = ComparisonRow(sc.label, sc.mode, sc.tuner, sc.gains)
    try:
        if sc.tuner is not None:
            res = _tune(sc, problem, p, sim, settings)
            if isinstance(res, PidGains):
                row.gains = res
            else:
                row.gains, row.tuning_score = res.best_gains, res.best_score
                row.tuning_evals, row.history = res.evals, res.history
        ts = integrate_closed_loop(p, fuzzy, row.gains, road, sim.replace(mode=sc.mode))
        row.series = ts
        row.metrics = compute_metrics(ts, settle_skip)
    except Exception as exc:  # noqa: BLE001 - a failed row must not abort the others
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def run_comparison(scenarios, road: RoadProfile, p: SuspensionParams = SuspensionParams(),
                   fuzzy: FuzzySystem | None = None, sim: SimConfig = SimConfig(),
                   reference: str | None = None, settings: TunerSettings = TunerSettings(),
                   settle_skip: float = 1.0, workers: int = 1) -> ComparisonTable:
    """Tune, simulate and score every scenario on one shared road.

    Deltas are ``100 * (value - ref) / |ref|`` per metric against the
    ``reference`` scenario (default: the first). A scenario whose tuning or
    simulation raises is reported as failed; the others still run.
    """
    scenarios = list(scenarios)
    if len(scenarios) < 2:
        raise ValueError("a comparison needs at least two scenarios")
    labels = [s.label for s in scenarios]
    if len(set(labels)) != len(labels):
        raise ValueError("scenario labels must be unique")
    reference = labels[0] if reference is None else reference
    if reference not in labels:
        raise ValueError(f"reference scenario {reference!r} is not among {labels}")
    fuzzy = FuzzySystem.default() if fuzzy is None else fuzzy
    problem = TuningProblem(p, fuzzy, road, sim, settings.weights)

    def run(sc):
        return _run_row(sc, p, fuzzy, road, sim, problem, settings, settle_skip)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(run, scenarios))
    else:
        rows = [run(sc) for sc in scenarios]

    ref = rows[labels.index(reference)]
    if ref.metrics is not None:
        for r in rows:
            if r.metrics is None:
                continue
            for name in METRIC_FIELDS:
                base = getattr(ref.metrics, name)
                v = getattr(r.metrics, name)
                r.deltas[name] = 0.0 if v == base else (
                    100.0 * (v - base) / abs(base) if base != 0 else math.copysign(math.inf, v - base))
    return ComparisonTable(rows, reference, settle_skip)
