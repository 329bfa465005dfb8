"""Ziegler-Nichols ultimate-gain tuning.

A plant handle is any callable ``plant(kp) -> (t, y)`` returning the
closed-loop response under pure proportional control. ``LtiPlant`` wraps a
continuous transfer function discretized with a zero-order hold.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import signal

from ..pid import PidGains

__all__ = ["LtiPlant", "UltimatePoint", "ZnError", "oscillation_growth", "ultimate_point", "zn_tune"]


class ZnError(RuntimeError):
    pass


class UltimatePoint(NamedTuple):
    k_u: float
    t_u: float


class LtiPlant:
    """Unity-feedback step response of ``kp * G(s)`` sampled at ``dt``.

    The plant is discretized once (exact ZOH); closing the loop with a
    proportional gain happens in the discrete domain.
    """

    def __init__(self, num, den, dt: float = 1e-3, horizon: float = 60.0):
        if not dt > 0 or not horizon > dt:
            raise ValueError("need dt > 0 and horizon > dt")
        self.num = np.atleast_1d(np.asarray(num, dtype=float))
        self.den = np.atleast_1d(np.asarray(den, dtype=float))
        self.dt = dt
        self.horizon = horizon
        numd, dend, _ = signal.cont2discrete((self.num, self.den), dt, method="zoh")
        self._numd = np.trim_zeros(np.ravel(numd), "f")
        self._dend = np.ravel(dend)

    def scaled(self, factor: float) -> "LtiPlant":
        return LtiPlant(self.num * factor, self.den, self.dt, self.horizon)

    def __call__(self, kp: float):
        n = len(self._dend)
        num = np.zeros(n)
        num[n - len(self._numd):] = kp * self._numd
        den = self._dend + num
        t = np.arange(int(round(self.horizon / self.dt)) + 1) * self.dt
        y = signal.lfilter(num, den, np.ones_like(t))
        return t, y


def _peaks(t, y):
    """Times and heights of the local maxima of ``y``."""
    idx, _ = signal.find_peaks(y)
    return t[idx], y[idx]


def oscillation_growth(t, y) -> float:
    """Ratio of the last peak excursion to the first; ``nan`` if fewer than
    three peaks. Excursions are peak-to-following-trough heights, so a
    drifting mean does not bias the ratio."""
    if not np.all(np.isfinite(y)):
        return np.inf
    pk_i, _ = signal.find_peaks(y)
    tr_i, _ = signal.find_peaks(-y)
    if pk_i.size < 3 or tr_i.size < 2:
        return np.nan
    amp = []
    for i in pk_i:
        later = tr_i[tr_i > i]
        if later.size:
            amp.append(y[i] - y[later[0]])
    if len(amp) < 2 or amp[0] <= 0:
        return np.nan
    return amp[-1] / amp[0]


def ultimate_point(plant, k_low: float = 1e-3, k_high: float = 1e3, rtol: float = 1e-4,
                   ) -> UltimatePoint:
    """Bisect on the proportional gain for the onset of sustained oscillation.

    A gain oscillates when its peak envelope does not decay (growth >= 1).
    ``k_high`` must oscillate and ``k_low`` must not.
    """

    def sustained(k):
        g = oscillation_growth(*plant(k))
        return bool(np.isfinite(g) and g >= 1.0) or g == np.inf

    if not sustained(k_high):
        raise ZnError(f"no sustained oscillation up to kp = {k_high:g}")
    if sustained(k_low):
        raise ZnError(f"plant already oscillates at kp = {k_low:g}")
    lo, hi = k_low, k_high
    while hi - lo > rtol * hi:
        mid = np.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        if sustained(mid):
            hi = mid
        else:
            lo = mid
    k_u = 0.5 * (lo + hi)
    t, y = plant(k_u)
    times, _ = _peaks(t, y)
    if times.size < 3:
        raise ZnError("too few peaks at the ultimate gain to measure a period")
    t_u = float(np.median(np.diff(times)))
    return UltimatePoint(float(k_u), t_u)


def zn_tune(plant, k_low: float = 1e-3, k_high: float = 1e3) -> PidGains:
    """Classic Ziegler-Nichols PID from the ultimate gain and period."""
    k_u, t_u = ultimate_point(plant, k_low, k_high)
    kp = 0.6 * k_u
    return PidGains(kp, 2.0 * kp / t_u, kp * t_u / 8.0)
