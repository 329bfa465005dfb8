"""Discrete PID on suspension distortion and the run-scoring judgment function."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "JudgmentResult",
    "JudgmentWeights",
    "PidGains",
    "PidState",
    "judgment",
    "pid_step",
]


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"PID gains must be finite and > 0; {name}={value!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.kp, self.ki, self.kd])

    def to_dict(self) -> dict:
        return asdict(self)


class PidState(NamedTuple):
    integral: float = 0.0
    prev_error: float | None = None


@dataclass(frozen=True)
class JudgmentWeights:
    """Weights of the judgment function and its horizon ``T`` (s).

    ``w1`` scales absolute error, ``w2`` squared control effort, ``w3`` the
    rise time and ``w4`` the overshoot excursion. ``branch_order="literal"``
    swaps which case carries the overshoot term; the default applies the
    penalty when overshoot occurs.
    """

    w1: float = 0.999
    w2: float = 0.001
    w3: float = 2.0
    w4: float = 100.0
    T: float = 1.0
    branch_order: str = "standard"

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "w4"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.branch_order not in ("standard", "literal"):
            raise ValueError("branch_order must be 'standard' or 'literal'")

    def to_dict(self) -> dict:
        return asdict(self)


class JudgmentResult(NamedTuple):
    j: float
    t_p: float
    overshoot_peak: float


def pid_step(gains: PidGains, state: PidState, e: float, dt: float):
    """Advance the controller by one sample.

    Backward-Euler integral and backward-difference derivative; the
    derivative is zero on the first call (no previous error).

    Returns:
        ``(u, new_state)``
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    integral = state.integral + e * dt
    deriv = 0.0 if state.prev_error is None else (e - state.prev_error) / dt
    u = gains.kp * e + gains.ki * integral + gains.kd * deriv
    return u, PidState(integral, e)


def judgment(e_series, u_series, dt: float, w: JudgmentWeights, reference: float = 0.0,
             ) -> JudgmentResult:
    """Score a closed-loop run from its error and control samples.

    The plant output is recovered as ``reference - e``. The rise time is the
    first sample time at which the output reaches or crosses the reference,
    or the series length ``n * dt`` if it never does. Overshoot is output
    excursion beyond the reference on the far side from where it started;
    when the output starts at the reference, any excursion counts.
    """
    e = np.asarray(e_series, dtype=float)
    u = np.asarray(u_series, dtype=float)
    if e.ndim != 1 or e.shape != u.shape:
        raise ValueError("error and control series must be 1-D and of equal length")
    if e.size < 1:
        raise ValueError("series must contain at least one sample")
    if not dt > 0:
        raise ValueError("dt must be positive")

    output = reference - e
    start = np.sign(reference - output[0])
    if start == 0:
        t_p = 0.0
        overshoot = np.abs(e)
    else:
        reached = np.nonzero(np.sign(reference - output) != start)[0]
        t_p = reached[0] * dt if reached.size else e.size * dt
        overshoot = np.maximum(0.0, start * (output - reference))

    base = np.sum(w.w1 * np.abs(e) + w.w2 * u * u) * dt + w.w3 * t_p
    has_overshoot = bool(np.any(overshoot > 0))
    penalize = has_overshoot if w.branch_order == "standard" else not has_overshoot
    if penalize:
        base += w.w4 * np.sum(overshoot) * dt
    peak = float(overshoot.max()) if overshoot.size else 0.0
    return JudgmentResult(float(base), float(t_p), peak)
