"""Shared pieces of the gain optimizers: results, encodings, bookkeeping."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..pid import PidGains

__all__ = [
    "OptResult",
    "OptimizationError",
    "decode_gains",
    "location_dim",
    "smell_concentration",
]


class OptimizationError(RuntimeError):
    pass


@dataclass
class OptResult:
    best_gains: PidGains
    best_score: float
    history: np.ndarray
    evals: int
    method: str = ""
    route: np.ndarray = field(default=None, repr=False)

    def to_csv(self, path) -> Path:
        """Convergence curve: one ``iteration,best_score`` row per iteration."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "best_score"])
            for i, v in enumerate(self.history):
                w.writerow([i, repr(float(v))])
        return path


def smell_concentration(loc, beta: float) -> float:
    """Smell judgment value of a fly at ``loc`` (any number of coordinates).

    ``1/D + D (0.5 - beta)`` with ``D`` the distance to the origin; ``beta``
    in [0, 1] lets the value turn negative.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    d = math.sqrt(float(np.dot(loc, loc)))
    if d == 0.0:
        raise ValueError("smell concentration undefined at the origin")
    return 1.0 / d + d * (0.5 - beta)


def location_dim(encoding: str) -> int:
    if encoding == "axis":
        return 3
    if encoding == "smell":
        return 9
    raise ValueError(f"unknown gain encoding {encoding!r}")


def decode_gains(loc: np.ndarray, encoding: str, gain_scale, beta: float = 0.5):
    """Map a fly location to ``(kp, ki, kd)``; ``None`` if any gain is not > 0.

    ``axis``: one coordinate per gain, ``gain = |coord| * scale``.
    ``smell``: three coordinates per gain, ``gain = smell(coords) * scale``.
    """
    location_dim(encoding)
    scale = np.asarray(gain_scale, dtype=float)
    if encoding == "axis":
        gains = np.abs(loc) * scale
    else:
        gains = np.empty(3)
        for j in range(3):
            sub = loc[3 * j:3 * j + 3]
            if not np.any(sub):
                return None
            gains[j] = smell_concentration(sub, beta) * scale[j]
    if not np.all(np.isfinite(gains)) or np.any(gains <= 0):
        return None
    return gains


class Evaluator:
    """Counts objective calls and maps NaN scores to +inf."""

    def __init__(self, objective, workers: int = 1):
        self.objective = objective
        self.workers = workers
        self.evals = 0

    def __call__(self, gains_list) -> np.ndarray:
        gains_objs = [PidGains(*map(float, g)) for g in gains_list]
        if self.workers > 1 and len(gains_objs) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                scores = list(pool.map(self.objective, gains_objs))
        else:
            scores = [self.objective(g) for g in gains_objs]
        self.evals += len(scores)
        return np.array([float(s) for s in scores])


def sanitize(scores: np.ndarray) -> np.ndarray:
    return np.where(np.isnan(scores), np.inf, scores)


def check_initial(scores: np.ndarray, gains, method: str):
    if np.any(np.isnan(scores)):
        bad = [tuple(np.round(g, 6)) for g, s in zip(gains, scores) if np.isnan(s)]
        raise OptimizationError(
            f"{method}: objective returned NaN for {len(bad)} initial candidate(s), "
            f"first at gains {bad[0]}")
