"""Random road elevation profiles from a two-slope displacement PSD."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import signal

__all__ = [
    "RoadProfile",
    "RoadSpec",
    "band_variance",
    "estimate_psd",
    "generate_profile",
    "psd_value",
    "read_profile_csv",
    "write_profile_csv",
]


@dataclass(frozen=True)
class RoadSpec:
    """Road roughness description.

    Defaults describe a class-C road: ``C(omega_ref) = 256e-6 m^2/(cycles/m)``
    at ``omega_ref = 0.1 cycles/m`` with waviness exponents 2 (below the
    reference frequency) and 1.5 (above it).
    """

    c_ref: float = 256e-6
    omega_ref: float = 0.1
    w_low: float = 2.0
    w_high: float = 1.5
    omega_min: float = 0.01
    omega_max: float = 10.0
    n_harmonics: int = 500
    seed: int = 0

    def __post_init__(self):
        if not self.c_ref >= 0:
            raise ValueError("c_ref must be >= 0")
        if not 0 < self.omega_min < self.omega_ref < self.omega_max:
            raise ValueError("need 0 < omega_min < omega_ref < omega_max")
        if int(self.n_harmonics) < 1:
            raise ValueError("n_harmonics must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class RoadProfile:
    """Elevation ``samples`` (m) taken every ``dt`` seconds at forward speed ``velocity``."""

    dt: float
    samples: np.ndarray
    velocity: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("a road profile needs at least 2 samples")
        if not np.all(np.isfinite(samples)):
            raise ValueError("road samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.dt

    @property
    def duration(self) -> float:
        return (self.samples.size - 1) * self.dt

    def __eq__(self, other):
        if not isinstance(other, RoadProfile):
            return NotImplemented
        return (self.dt == other.dt and self.velocity == other.velocity
                and np.array_equal(self.samples, other.samples))


def psd_value(spec: RoadSpec, omega):
    """Displacement PSD at spatial frequency ``omega`` (cycles/m)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(~(omega > 0)):
        raise ValueError("spatial frequency must be positive")
    ratio = omega / spec.omega_ref
    out = np.where(omega <= spec.omega_ref,
                   spec.c_ref * ratio ** -spec.w_low,
                   spec.c_ref * ratio ** -spec.w_high)
    return out[()] if out.ndim == 0 else out


def band_variance(spec: RoadSpec) -> float:
    """Closed-form integral of the PSD over ``[omega_min, omega_max]``."""

    def piece(a, b, w):
        if a >= b:
            return 0.0
        k = spec.c_ref * spec.omega_ref ** w
        if w == 1.0:
            return k * np.log(b / a)
        return k * (a ** (1 - w) - b ** (1 - w)) / (w - 1)

    lo, hi, ref = spec.omega_min, spec.omega_max, spec.omega_ref
    return float(piece(lo, min(hi, ref), spec.w_low) + piece(max(lo, ref), hi, spec.w_high))


def _harmonics(spec: RoadSpec):
    n = int(spec.n_harmonics)
    edges = np.geomspace(spec.omega_min, spec.omega_max, n + 1)
    omega = np.sqrt(edges[:-1] * edges[1:])
    var = 2.0 * psd_value(spec, omega) * np.diff(edges)
    phase = np.random.default_rng(spec.seed).uniform(0.0, 2.0 * np.pi, n)
    return omega, var, phase


def _snap_to_window(omega, var, phase, d_omega, max_bin):
    """Move each harmonic onto the window's frequency grid ``m * d_omega``.

    Every component then completes a whole number of cycles over the
    profile, so components are orthogonal on the sample grid and the
    sample variance equals the synthesized variance. Harmonics landing on
    the same bin are merged (variances add, first phase kept).
    """
    bins = np.clip(np.rint(omega / d_omega).astype(np.int64), 1, max_bin)
    uniq, first, inverse = np.unique(bins, return_index=True, return_inverse=True)
    merged = np.zeros(uniq.size)
    np.add.at(merged, inverse, var)
    return uniq * d_omega, np.sqrt(merged), phase[first]


def generate_profile(spec: RoadSpec, velocity: float, dt: float, duration: float) -> RoadProfile:
    """Synthesize ``z_g(t)`` as a sum of sinusoids with random phases.

    Spatial frequencies are log-spaced over the synthesis band; each carries
    the variance of its band slice, ``A_k = sqrt(2 S(omega_k) d_omega_k)``,
    and a uniform random phase from ``spec.seed``. Frequencies are then
    snapped to the profile window's grid (see ``_snap_to_window``), so the
    realization depends on ``duration`` as well as on the seed.
    """
    if not velocity > 0:
        raise ValueError("velocity must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not duration >= dt:
        raise ValueError("duration must be >= dt")
    n_samples = int(np.floor(duration / dt + 1e-9)) + 1
    if n_samples < 2:
        raise ValueError("profile would have fewer than 2 samples")

    omega, var, phase = _harmonics(spec)
    max_bin = (n_samples - 1) // 2
    if max_bin < 1:
        raise ValueError("profile too short to carry any harmonic")
    omega, amp, phase = _snap_to_window(omega, var, phase,
                                        1.0 / (velocity * dt * n_samples), max_bin)
    t = np.arange(n_samples) * dt
    z = np.zeros(n_samples)
    # chunked to bound memory at (chunk x n_harmonics)
    chunk = max(1, 2_000_000 // omega.size)
    k = 2.0 * np.pi * omega * velocity
    for start in range(0, n_samples, chunk):
        tt = t[start:start + chunk, None]
        z[start:start + chunk] = np.sin(tt * k + phase) @ amp
    return RoadProfile(dt=float(dt), samples=z, velocity=float(velocity))


def estimate_psd(profile: RoadProfile, nperseg: int | None = None):
    """Welch estimate of the profile's PSD against spatial frequency.

    Returns ``(omega, power)`` with ``omega`` in cycles/m and ``power`` in
    m^2/(cycles/m), one-sided.
    """
    z = profile.samples
    n = z.size
    if n < 64:
        raise ValueError("need at least 64 samples to estimate a PSD")
    if nperseg is None:
        nperseg = max(16, 2 ** int(np.log2(n / 32)))
    if nperseg > n // 4:
        raise ValueError("nperseg too large for at least 4 segments")
    f, p_t = signal.welch(z, fs=1.0 / profile.dt, window="hann", nperseg=nperseg,
                          noverlap=nperseg // 2, detrend="constant", scaling="density")
    v = profile.velocity
    return f / v, p_t * v


def write_profile_csv(profile: RoadProfile, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "elevation_m"])
        for t, z in zip(profile.time, profile.samples):
            w.writerow([repr(float(t)), repr(float(z))])
    return path


def read_profile_csv(path, velocity: float) -> RoadProfile:
    """Load a two-column ``time_s,elevation_m`` file; the sample period is
    taken from the time column, which must be uniformly spaced."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError("expected two columns: time_s, elevation_m")
    t = data[:, 0]
    steps = np.diff(t)
    if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-6, atol=1e-12):
        raise ValueError("time column must be uniformly spaced")
    return RoadProfile(dt=float(t[1] - t[0]), samples=data[:, 1], velocity=float(velocity))
