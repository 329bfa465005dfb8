"""Chaotic fruit fly optimizer for PID gains.

Each iteration, every fly is placed relative to the swarm location ``L``::

    fly = L + s * balance + r * (1 - s) * chaos

``balance`` is the swarm's last successful displacement (zero until the
swarm has moved), ``chaos`` a per-axis step of size ``radius_t * (2c - 1)``
with ``c`` iterated on the logistic map, and ``r`` a uniform draw. The
radius decays geometrically from ``search_radius`` to
``search_radius * final_radius_frac``. The swarm jumps to the best fly of
an iteration only if it improves on the best score so far.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .common import (Evaluator, OptResult, check_initial, decode_gains, location_dim,
                     sanitize)
from ..pid import PidGains

__all__ = [
    "CfoaConfig",
    "FlyLocation",
    "cfoa_minimize",
    "chaotic_update",
    "logistic_step",
    "radius_schedule",
]

_SHORT_CYCLES = (0.25, 0.5, 0.75)


class FlyLocation(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class CfoaConfig:
    pop_size: int = 30
    max_iter: int = 200
    s: float = 0.7
    logistic_mu: float = 4.0
    search_radius: float = 1.0
    final_radius_frac: float = 1e-3
    init_low: float = 0.0
    init_high: float = 2.0
    gain_scale: tuple = (1.0, 1.0, 1.0)
    encoding: str = "axis"
    beta_mode: str = "per_iteration"
    beta: float = 0.5
    chaos_source: str = "logistic"
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0.0 <= self.s <= 1.0:
            raise ValueError("balance parameter s must lie in [0, 1]")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not (self.search_radius > 0 and 0 < self.final_radius_frac <= 1):
            raise ValueError("need search_radius > 0 and 0 < final_radius_frac <= 1")
        if not self.init_low < self.init_high:
            raise ValueError("need init_low < init_high")
        if self.beta_mode not in ("per_iteration", "fixed"):
            raise ValueError("beta_mode must be 'per_iteration' or 'fixed'")
        if self.chaos_source not in ("logistic", "uniform"):
            raise ValueError("chaos_source must be 'logistic' or 'uniform'")
        location_dim(self.encoding)
        if len(self.gain_scale) != 3:
            raise ValueError("gain_scale needs three entries")

    def to_dict(self) -> dict:
        return asdict(self)


def logistic_step(c: float, mu: float = 4.0) -> float:
    """One step of the logistic map ``mu * c * (1 - c)``."""
    if not 0.0 < c < 1.0:
        raise ValueError(f"logistic state must lie in (0, 1), got {c!r}")
    return mu * c * (1.0 - c)


def _logistic(c: np.ndarray, mu: float) -> np.ndarray:
    c = mu * c * (1.0 - c)
    # keep the orbit off 0/1 and the short cycles of mu=4
    bad = (c <= 1e-12) | (c >= 1.0 - 1e-12)
    for p in _SHORT_CYCLES:
        bad |= np.abs(c - p) < 1e-12
    if np.any(bad):
        c = np.where(bad, np.mod(c + 0.6180339887498949, 1.0), c)
        c = np.clip(c, 1e-9, 1.0 - 1e-9)
    return c


def chaotic_update(loc, balance_step, chaos_step, r, s: float):
    """Per-axis move ``loc + s * balance + r * (1 - s) * chaos``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("balance parameter s must lie in [0, 1]")
    out = (np.asarray(loc, dtype=float) + s * np.asarray(balance_step, dtype=float)
           + np.asarray(r, dtype=float) * (1.0 - s) * np.asarray(chaos_step, dtype=float))
    if isinstance(loc, FlyLocation):
        return FlyLocation(*out)
    return out


def radius_schedule(search_radius: float, final_frac: float, max_iter: int) -> np.ndarray:
    t = np.arange(max_iter + 1)
    return search_radius * final_frac ** (t / max_iter)


def _initial_chaos(rng, shape):
    c = rng.uniform(0.0, 1.0, shape)
    for _ in range(100):
        bad = (c <= 0.0) | (c >= 1.0)
        for p in _SHORT_CYCLES:
            bad |= np.abs(c - p) < 1e-6
        if not bad.any():
            return c
        c[bad] = rng.uniform(0.0, 1.0, int(bad.sum()))
    raise RuntimeError("could not draw a usable chaos state")


def cfoa_minimize(objective, cfg: CfoaConfig = CfoaConfig()) -> OptResult:
    """Minimize ``objective(PidGains) -> float`` with the chaotic fruit fly search.

    All random numbers of an iteration are drawn before any objective call,
    so results do not depend on ``cfg.workers``.
    """
    rng = np.random.default_rng(cfg.seed)
    dim = location_dim(cfg.encoding)
    pop = cfg.pop_size
    radii = radius_schedule(cfg.search_radius, cfg.final_radius_frac, cfg.max_iter)
    evaluate = Evaluator(objective, cfg.workers)

    location = rng.uniform(cfg.init_low, cfg.init_high, dim)
    chaos = _initial_chaos(rng, (pop, dim)) if cfg.chaos_source == "logistic" else None
    balance = np.zeros(dim)

    def swarm(radius):
        nonlocal chaos
        beta = cfg.beta if cfg.beta_mode == "fixed" else float(rng.uniform())
        r = rng.uniform(0.0, 1.0, (pop, dim))
        if chaos is not None:
            chaos = _logistic(chaos, cfg.logistic_mu)
            c = chaos
        else:
            c = rng.uniform(0.0, 1.0, (pop, dim))
        flies = chaotic_update(location, balance, radius * (2.0 * c - 1.0), r, cfg.s)
        gains = []
        for i in range(pop):
            fly_beta = beta
            g = decode_gains(flies[i], cfg.encoding, cfg.gain_scale, fly_beta)
            tries = 0
            while g is None:
                tries += 1
                if tries > 100:
                    raise RuntimeError("could not resample a positive-gain candidate")
                step = radius * (2.0 * rng.uniform(0.0, 1.0, dim) - 1.0)
                flies[i] = chaotic_update(location, balance, step, rng.uniform(0.0, 1.0, dim), cfg.s)
                if cfg.beta_mode == "per_iteration" and tries % 10 == 0:
                    # a large beta can make every smell near the swarm negative
                    fly_beta = float(rng.uniform())
                g = decode_gains(flies[i], cfg.encoding, cfg.gain_scale, fly_beta)
            gains.append(g)
        return flies, np.array(gains)

    flies, gains = swarm(radii[0])
    scores = evaluate(gains)
    check_initial(scores, gains, "CFOA")
    scores = sanitize(scores)
    k = int(np.argmin(scores))
    best_score, best_gains = scores[k], gains[k]
    location = flies[k].copy()
    route = [location.copy()]
    history = []

    for it in range(cfg.max_iter):
        flies, gains = swarm(radii[it + 1])
        scores = sanitize(evaluate(gains))
        k = int(np.argmin(scores))
        if scores[k] < best_score:
            balance = flies[k] - location
            location = flies[k].copy()
            best_score, best_gains = scores[k], gains[k]
        else:
            balance = np.zeros(dim)
        route.append(location.copy())
        history.append(best_score)

    return OptResult(PidGains(*map(float, best_gains)), float(best_score),
                     np.array(history), evaluate.evals, "CFOA", np.array(route))
