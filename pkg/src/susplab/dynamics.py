"""Nonlinear quarter-car plant: force laws, state derivatives, static equilibrium.

Two plant configurations share the tire and spring laws:

* ``active`` -- a skyhook actuator force between the masses.
* ``semi_active`` -- a variable damper whose command ``f_d`` scales a tanh
  term and is bounded to ``[f_min, f_max]``.

The numeric kernels are compiled with numba and take a flat parameter
vector (see :meth:`SuspensionParams.to_vector`) so the closed-loop
simulator can call them without touching Python objects.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple

import numpy as np
from numba import njit
from scipy.optimize import brentq

__all__ = [
    "ACTIVE",
    "SEMI_ACTIVE",
    "ForceBreakdown",
    "NumericalDivergenceError",
    "SuspensionParams",
    "VehicleState",
    "actuator_force",
    "derivatives",
    "forces",
    "shock_force",
    "spring_force",
    "static_equilibrium",
    "tire_force",
]

ACTIVE = "active"
SEMI_ACTIVE = "semi_active"
_MODE_CODES = {ACTIVE: 0, SEMI_ACTIVE: 1}

# Layout of the flat parameter vector consumed by the kernels.
(I_MS, I_MU, I_G, I_K11, I_K12, I_K13, I_K21, I_K22, I_CO, I_CS, I_CI, I_KS,
 I_KM, I_FMIN, I_FMAX, I_BS, I_BU, I_CUBIC, I_SIGN) = range(19)
N_PARAMS = 19


class NumericalDivergenceError(ArithmeticError):
    """A force or state became non-finite (or blew past the divergence bound)."""


@dataclass(frozen=True)
class SuspensionParams:
    """Physical constants of the quarter-car model (SI units).

    ``spring_cubic`` selects the argument of the cubic spring term:
    ``"travel"`` uses ``z_s - z_u`` and ``"tire"`` uses ``z_u - z_g``.

    ``sign_convention`` controls the base damper ``c_o`` term and the skyhook
    actuator force. With ``"literal"`` both terms push along the relative
    velocity, and both plants are then open-loop unstable (the ``c_o`` term
    and the actuator inject energy).
    ``"dissipative"`` (default) flips those two terms so they remove energy.
    """

    m_s: float = 36.0
    m_u: float = 240.0
    g: float = 9.81
    k11: float = 60063.0
    k12: float = 42509.0
    k13: float = 22875.0
    k21: float = 15302.0
    k22: float = 2728.0
    c_o: float = 1400.0
    c_s: float = 620.79
    c_i: float = 810.78
    k_s: float = 10.54
    k_m: float = 13.76
    f_min: float = 0.0
    f_max: float = 350.0
    b_s: float = 1335.0
    b_u: float = 2607.0
    spring_cubic: str = "travel"
    sign_convention: str = "dissipative"

    def __post_init__(self):
        for name in ("m_s", "m_u"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("k11", "k12", "k13", "k21", "k22", "c_o", "c_s", "c_i",
                     "k_s", "k_m", "b_s", "b_u", "g"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if not 0 <= self.f_min <= self.f_max:
            raise ValueError("need 0 <= f_min <= f_max")
        if self.spring_cubic not in ("travel", "tire"):
            raise ValueError("spring_cubic must be 'travel' or 'tire'")
        if self.sign_convention not in ("dissipative", "literal"):
            raise ValueError("sign_convention must be 'dissipative' or 'literal'")

    def to_vector(self) -> np.ndarray:
        v = np.empty(N_PARAMS)
        v[:I_CUBIC] = [self.m_s, self.m_u, self.g, self.k11, self.k12, self.k13,
                       self.k21, self.k22, self.c_o, self.c_s, self.c_i, self.k_s,
                       self.k_m, self.f_min, self.f_max, self.b_s, self.b_u]
        v[I_CUBIC] = 0.0 if self.spring_cubic == "travel" else 1.0
        v[I_SIGN] = 1.0 if self.sign_convention == "literal" else -1.0
        return v

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SuspensionParams":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown suspension parameter(s): {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            kwargs[key] = value if key in ("spring_cubic", "sign_convention") else float(value)
        return cls(**kwargs)


class VehicleState(NamedTuple):
    """Plant state. ``derivatives`` returns the time derivative in the same
    slots: ``(dz_s, dv_s, dz_u, dv_u)``."""

    z_s: float
    v_s: float
    z_u: float
    v_u: float


class ForceBreakdown(NamedTuple):
    f_tire: float
    f_spring: float
    f_damper: float


# -- kernels ---------------------------------------------------------------

@njit(cache=True)
def _tire(p, z_u, z_g):
    d = z_u - z_g
    return p[I_K11] * d + p[I_K12] * d * d - p[I_K13] * d * d * d


@njit(cache=True)
def _spring(p, z_s, z_u, z_g):
    d = z_s - z_u
    c = d if p[I_CUBIC] == 0.0 else z_u - z_g
    return p[I_K21] * d + p[I_K22] * c * c * c


@njit(cache=True)
def _shock(p, rel_vel, rel_disp, f_d):
    return (p[I_CS] * rel_vel + p[I_CI] * rel_disp
            + f_d * math.tanh(p[I_KS] * rel_vel + p[I_KM] * rel_disp))


@njit(cache=True)
def _actuator(p, v_s, v_u):
    return -p[I_BS] * v_s + p[I_BU] * v_u


@njit(cache=True)
def _accelerations(p, z_s, v_s, z_u, v_u, z_g, mode, f_d, f_extra):
    """Return (a_s, a_u, f_tire, f_spring, f_damper).

    ``f_extra`` is an additional force pushing the masses apart (positive on
    the sprung mass); zero except for the parallel PID routing.
    """
    f_tire = _tire(p, z_u, z_g)
    f_spring = _spring(p, z_s, z_u, z_g)
    rel_v = v_s - v_u
    sign = p[I_SIGN]
    base = sign * p[I_CO] * rel_v
    if mode == 0:
        f_damper = _actuator(p, v_s, v_u)
        a_s = (-f_spring - sign * f_damper + base + f_extra) / p[I_MS] - p[I_G]
        a_u = (f_spring + sign * f_damper - f_tire - f_extra) / p[I_MU] - p[I_G]
    else:
        f_damper = _shock(p, rel_v, z_s - z_u, f_d)
        a_s = (-f_spring - f_damper + base + f_extra) / p[I_MS] - p[I_G]
        a_u = (f_spring + f_damper - f_tire - base - f_extra) / p[I_MU] - p[I_G]
    return a_s, a_u, f_tire, f_spring, f_damper


# -- public API ------------------------------------------------------------

def tire_force(p: SuspensionParams, z_u, z_g):
    """Tire contact force for tire deflection ``z_u - z_g`` (N)."""
    d = np.subtract(z_u, z_g)
    return p.k11 * d + p.k12 * d ** 2 - p.k13 * d ** 3


def spring_force(p: SuspensionParams, z_s, z_u, z_g=0.0):
    """Suspension spring force. ``z_g`` only matters for ``spring_cubic='tire'``."""
    d = np.subtract(z_s, z_u)
    c = d if p.spring_cubic == "travel" else np.subtract(z_u, z_g)
    return p.k21 * d + p.k22 * c ** 3


def shock_force(p: SuspensionParams, rel_vel, rel_disp, f_d):
    """Variable-damper force for relative velocity/displacement ``z_s - z_u``."""
    if not p.f_min <= f_d <= p.f_max:
        raise ValueError(f"damper command {f_d!r} outside [{p.f_min}, {p.f_max}]")
    return p.c_s * rel_vel + p.c_i * rel_disp + f_d * np.tanh(p.k_s * rel_vel + p.k_m * rel_disp)


def actuator_force(p: SuspensionParams, v_s, v_u):
    """Skyhook actuator force of the active configuration."""
    return -p.b_s * v_s + p.b_u * v_u


def _check_mode(mode: str) -> int:
    try:
        return _MODE_CODES[mode]
    except KeyError:
        raise ValueError(f"mode must be one of {sorted(_MODE_CODES)}, got {mode!r}") from None


def forces(p: SuspensionParams, s: VehicleState, z_g: float, mode: str = SEMI_ACTIVE,
           f_d: float = 0.0) -> ForceBreakdown:
    code = _check_mode(mode)
    if code == 1 and not p.f_min <= f_d <= p.f_max:
        raise ValueError(f"damper command {f_d!r} outside [{p.f_min}, {p.f_max}]")
    out = _accelerations(p.to_vector(), float(s[0]), float(s[1]), float(s[2]), float(s[3]),
                         float(z_g), code, float(f_d), 0.0)
    return ForceBreakdown(*out[2:])


def derivatives(p: SuspensionParams, s: VehicleState, z_g: float, zg_dot: float = 0.0,
                mode: str = SEMI_ACTIVE, f_d: float = 0.0) -> VehicleState:
    """Time derivative of the plant state.

    ``zg_dot`` is accepted for interface completeness; no force law
    depends on road velocity. ``f_d`` is ignored in active mode.

    Raises:
        ValueError: ``f_d`` outside the damper bounds in semi-active mode.
        NumericalDivergenceError: any force or acceleration is non-finite.
    """
    code = _check_mode(mode)
    if code == 1 and not p.f_min <= f_d <= p.f_max:
        raise ValueError(f"damper command {f_d!r} outside [{p.f_min}, {p.f_max}]")
    z_s, v_s, z_u, v_u = (float(x) for x in s)
    a_s, a_u, ft, fs, fdmp = _accelerations(p.to_vector(), z_s, v_s, z_u, v_u,
                                            float(z_g), code, float(f_d), 0.0)
    if not all(math.isfinite(x) for x in (a_s, a_u, ft, fs, fdmp)):
        raise NumericalDivergenceError(
            f"non-finite force at state={tuple(s)!r}, z_g={z_g!r}: "
            f"tire={ft}, spring={fs}, damper={fdmp}")
    return VehicleState(v_s, a_s, v_u, a_u)


def _solve_increasing(fn, target, scale=0.05):
    lo, hi = -scale, scale
    for _ in range(60):
        if fn(lo) < target < fn(hi):
            return brentq(lambda x: fn(x) - target, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
        lo, hi = 2 * lo, 2 * hi
    raise ValueError("static equilibrium not bracketed")


def static_equilibrium(p: SuspensionParams, z_g: float = 0.0, mode: str = SEMI_ACTIVE,
                       f_d: float = 0.0) -> VehicleState:
    """At-rest state where gravity is balanced by tire and spring deflection."""
    _check_mode(mode)
    total = (p.m_s + p.m_u) * p.g
    # whole vehicle weight sits on the tire
    tire_defl = _solve_increasing(lambda d: float(tire_force(p, d, 0.0)), -total)
    z_u = z_g + tire_defl

    def suspension(d):
        f = float(spring_force(p, z_u + d, z_u, z_g))
        if mode == SEMI_ACTIVE:
            f += p.c_i * d + f_d * math.tanh(p.k_m * d)
        return f

    travel = _solve_increasing(suspension, -p.m_s * p.g)
    return VehicleState(z_u + travel, 0.0, z_u, 0.0)
