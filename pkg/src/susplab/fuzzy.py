"""Three-input / one-output Mamdani controller for the damper command.

Inputs are sprung-mass velocity (m/s), sprung-mass acceleration (m/s^2) and
suspension distortion (m); the output ``U`` is the damper command in N.
Every variable carries nine generalized-bell membership functions, one per
linguistic level.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numba import njit

__all__ = [
    "BellMF",
    "FuzzyResult",
    "FuzzySystem",
    "FuzzyVariable",
    "Level",
    "ANCHOR_RULES",
    "RuleBase",
    "MF_TABLE",
    "bell",
    "build_rule_base",
    "default_variables",
    "table_params",
]


class Level(enum.IntEnum):
    NMIN = 0
    NL = 1
    NM = 2
    NS = 3
    Small = 4
    PS = 5
    PM = 6
    PL = 7
    PMAX = 8

    @classmethod
    def parse(cls, label) -> "Level":
        if isinstance(label, (int, np.integer)):
            return cls(int(label))
        try:
            return cls[str(label).strip()]
        except KeyError:
            raise ValueError(f"unknown linguistic level {label!r}") from None


STRONG_ACCEL = frozenset({Level.NMIN, Level.NL, Level.NM, Level.PM, Level.PL, Level.PMAX})

# (p, q, r) per level, NMIN..PMAX, the reference design values.
MF_TABLE = {
    "velocity": [
        (0.1575, 2.5, -1.0), (0.1575, 2.5, 0.685), (0.1575, 2.5, -0.37),
        (0.1575, 2.5, -0.055), (0.1575, 2.5, 0.26), (0.1575, 2.5, 0.575),
        (0.1575, 2.5, 0.89), (0.1575, 2.5, 1.205), (0.1575, 2.5, 1.52),
    ],
    "acceleration": [
        (1.188, 2.499, -9.0), (1.188, 2.5, 0.65), (1.188, 2.5, -4.25),
        (1.188, 2.5, -1.875), (1.188, 2.5, 0.5), (1.188, 2.5, 2.875),
        (1.188, 2.5, 5.25), (1.188, 2.5, 7.625), (1.188, 2.501, 10.0),
    ],
    "distortion": [
        (0.0338, 2.5, 0.0193), (0.0376, 2.5, 0.0944), (0.0535, 2.2, 0.187),
        (0.0619, 2.5, 0.2803), (0.0528, 2.5, 0.3912), (0.0534, 2.5, 0.4995),
        (0.0493, 2.84, 0.6025), (0.0403, 2.5, 0.6972), (0.0458, 2.5, 0.7815),
    ],
    "U": [
        (21.88, 2.5, 0.0), (21.88, 2.5, 43.75), (21.88, 2.5, 87.5),
        (21.88, 2.5, 131.3), (21.88, 2.5, 175.0), (21.88, 2.5, 218.8),
        (21.9, 2.5, 263.0), (21.88, 2.5, 306.3), (21.88, 2.5, 350.0),
    ],
}

# Every other center of these two variables lies on an evenly spaced ladder;
# the NL entries above do not, and their ladder slot is the negative value
# below. table="literal" keeps MF_TABLE untouched.
NL_CENTER_FIXES = {"velocity": -0.685, "acceleration": -6.625}

# Fixed anchor rules: number -> (velocity, acceleration, distortion, force).
ANCHOR_RULES = {
    1: ("NL", "NMIN", "PMAX", "PL"),
    2: ("NM", "NMIN", "PMAX", "PM"),
    3: ("NS", "NMIN", "NMIN", "PS"),
    4: ("PS", "NM", "PL", "PM"),
    5: ("PM", "NMIN", "PM", "PS"),
    6: ("PL", "NL", "NMIN", "PL"),
    7: ("NMIN", "NMIN", "NMIN", "PMAX"),
    8: ("PL", "NS", "PL", "NL"),
    9: ("PL", "Small", "PS", "NL"),
    726: ("NMIN", "PS", "NM", "PL"),
    727: ("Small", "NMIN", "NMIN", "PS"),
    728: ("PMAX", "NS", "NMIN", "NL"),
    729: ("PMAX", "PMAX", "PMAX", "NMIN"),
}


@dataclass(frozen=True)
class BellMF:
    """Generalized bell ``1 / (1 + |(x - r) / p|^(2q))``."""

    p: float
    q: float
    r: float

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ValueError("bell MF needs p > 0 and q > 0")
        if not all(np.isfinite((self.p, self.q, self.r))):
            raise ValueError("bell MF parameters must be finite")

    def __call__(self, x):
        return bell(x, self)


def bell(x, mf: BellMF):
    return 1.0 / (1.0 + np.abs((np.asarray(x, dtype=float) - mf.r) / mf.p) ** (2.0 * mf.q))


@dataclass(frozen=True)
class FuzzyVariable:
    name: str
    universe: tuple
    mfs: tuple

    def __post_init__(self):
        if len(self.mfs) != len(Level):
            raise ValueError(f"{self.name}: need exactly {len(Level)} membership functions")
        lo, hi = self.universe
        if not lo < hi:
            raise ValueError(f"{self.name}: empty universe")

    @classmethod
    def from_table(cls, name, triples, universe=None) -> "FuzzyVariable":
        mfs = tuple(BellMF(*t) for t in triples)
        if universe is None:
            # first and last levels widened by their half-width
            universe = (mfs[0].r - mfs[0].p, mfs[-1].r + mfs[-1].p)
        return cls(name, (float(universe[0]), float(universe[1])), mfs)

    def memberships(self, x) -> np.ndarray:
        lo, hi = self.universe
        x = min(max(float(x), lo), hi)
        return np.array([bell(x, mf) for mf in self.mfs])

    def normalized_position(self, level: Level) -> float:
        """Center of ``level`` mapped onto [-1, 1] across the universe."""
        lo, hi = self.universe
        return 2.0 * (self.mfs[level].r - lo) / (hi - lo) - 1.0

    def params(self) -> np.ndarray:
        return np.array([[mf.p, mf.q, mf.r] for mf in self.mfs])


def table_params(table: str = "corrected") -> dict:
    """MF parameter triples per variable; ``table`` is "corrected" or "literal"."""
    if table not in ("corrected", "literal"):
        raise ValueError("table must be 'corrected' or 'literal'")
    params = {name: list(rows) for name, rows in MF_TABLE.items()}
    if table == "corrected":
        for name, center in NL_CENTER_FIXES.items():
            p, q, _ = params[name][Level.NL]
            params[name][Level.NL] = (p, q, center)
    return params


def default_variables(table: str = "corrected"):
    """Input variables (velocity, acceleration, distortion) and output ``U``."""
    params = table_params(table)
    return (
        FuzzyVariable.from_table("velocity", params["velocity"]),
        FuzzyVariable.from_table("acceleration", params["acceleration"]),
        FuzzyVariable.from_table("distortion", params["distortion"]),
        FuzzyVariable.from_table("U", params["U"], universe=(0.0, 350.0)),
    )


class RuleBase:
    """Dense 9x9x9 map (velocity, acceleration, distortion) -> output level."""

    COLUMNS = ("vel_level", "acc_level", "dist_level", "out_level")

    def __init__(self, table):
        table = np.array(table, dtype=np.int64)
        if table.shape != (9, 9, 9):
            raise ValueError("rule table must have shape (9, 9, 9)")
        if table.min() < 0 or table.max() > 8:
            raise ValueError("rule consequents must be level indices 0..8")
        table.setflags(write=False)
        self._table = table

    @property
    def table(self) -> np.ndarray:
        return self._table

    def __len__(self):
        return self._table.size

    def __getitem__(self, key) -> Level:
        v, a, d = (Level.parse(k) for k in key)
        return Level(int(self._table[v, a, d]))

    def __eq__(self, other):
        return isinstance(other, RuleBase) and np.array_equal(self._table, other._table)

    def items(self):
        for v in Level:
            for a in Level:
                for d in Level:
                    yield (v, a, d), Level(int(self._table[v, a, d]))

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for (v, a, d), out in self.items():
                w.writerow([v.name, a.name, d.name, out.name])
        return path

    @classmethod
    def from_csv(cls, path) -> "RuleBase":
        table = np.full((9, 9, 9), -1, dtype=np.int64)
        with Path(path).open(newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != cls.COLUMNS:
                raise ValueError(f"rule CSV header must be {','.join(cls.COLUMNS)}")
            for row in reader:
                v, a, d, o = (Level.parse(row[c]) for c in cls.COLUMNS)
                if table[v, a, d] != -1:
                    raise ValueError(f"duplicate rule for {(v.name, a.name, d.name)}")
                table[v, a, d] = o
        if (table < 0).any():
            raise ValueError("rule CSV does not cover all 729 antecedent combinations")
        return cls(table)


def build_rule_base(variables=None) -> RuleBase:
    """Anchor rules plus the policy fill for the other 716 cells.

    Strong acceleration (NMIN/NL/NM, PM/PL/PMAX): output level is the
    acceleration level mirrored (``8 - i``), whatever the other inputs.
    Mild acceleration (NS/Small/PS): whichever of velocity and distortion sits
    further from the middle of its universe decides, mirrored the same way;
    ties go to distortion.
    """
    vel, _, dist = (variables or default_variables())[:3]
    table = np.empty((9, 9, 9), dtype=np.int64)
    for v in Level:
        for a in Level:
            for d in Level:
                if a in STRONG_ACCEL:
                    dominant = a
                else:
                    mag_v = abs(vel.normalized_position(v))
                    mag_d = abs(dist.normalized_position(d))
                    dominant = v if mag_v > mag_d else d
                table[v, a, d] = 8 - int(dominant)
    for v, a, d, out in ANCHOR_RULES.values():
        table[Level[v], Level[a], Level[d]] = Level[out]
    return RuleBase(table)


# -- inference kernel ------------------------------------------------------

@njit(cache=True)
def _mamdani(x, mf, universes, rules, grid, out_mf, weights):
    """Return (crisp output, total firing strength) for one input triple."""
    mu = np.empty((3, 9))
    for v in range(3):
        xv = min(max(x[v], universes[v, 0]), universes[v, 1])
        for k in range(9):
            mu[v, k] = 1.0 / (1.0 + abs((xv - mf[v, k, 2]) / mf[v, k, 0]) ** (2.0 * mf[v, k, 1]))
    level = np.zeros(9)
    total = 0.0
    for i in range(9):
        for j in range(9):
            a = min(mu[0, i], mu[1, j])
            for k in range(9):
                s = min(a, mu[2, k])
                total += s
                o = rules[i, j, k]
                if s > level[o]:
                    level[o] = s
    num = 0.0
    den = 0.0
    for n in range(grid.size):
        agg = 0.0
        for o in range(9):
            m = min(level[o], out_mf[o, n])
            if m > agg:
                agg = m
        num += weights[n] * grid[n] * agg
        den += weights[n] * agg
    if den <= 0.0:
        return 0.5 * (grid[0] + grid[-1]), total
    return num / den, total


class FuzzyResult(NamedTuple):
    u: float
    firing: float
    degenerate: bool


@dataclass(frozen=True)
class FuzzySystem:
    """Immutable Mamdani system: min AND, max aggregation, centroid defuzzification.

    The centroid is a trapezoidal integral over ``n_points`` samples of the
    output universe; the crisp output is clamped to ``[f_min, f_max]``.
    """

    velocity: FuzzyVariable
    acceleration: FuzzyVariable
    distortion: FuzzyVariable
    output: FuzzyVariable
    rules: RuleBase
    n_points: int = 1001
    f_min: float = 0.0
    f_max: float = 350.0

    @classmethod
    def default(cls, rules: RuleBase | None = None, table: str = "corrected",
                **kwargs) -> "FuzzySystem":
        vel, acc, dist, out = default_variables(table)
        if rules is None:
            rules = build_rule_base((vel, acc, dist))
        return cls(vel, acc, dist, out, rules, **kwargs)

    @cached_property
    def kernel_args(self):
        """Arrays handed to the compiled inference kernel."""
        inputs = (self.velocity, self.acceleration, self.distortion)
        mf = np.stack([var.params() for var in inputs])
        universes = np.array([var.universe for var in inputs], dtype=float)
        grid = np.linspace(*self.output.universe, int(self.n_points))
        out_mf = np.stack([bell(grid, m) for m in self.output.mfs])
        weights = np.empty_like(grid)
        h = np.diff(grid)
        weights[0], weights[-1] = h[0] / 2, h[-1] / 2
        weights[1:-1] = (h[:-1] + h[1:]) / 2
        return mf, universes, np.ascontiguousarray(self.rules.table), grid, out_mf, weights

    def evaluate(self, velocity: float, acceleration: float, distortion: float) -> FuzzyResult:
        x = np.array([velocity, acceleration, distortion], dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("fuzzy inputs must be finite")
        raw, total = _mamdani(x, *self.kernel_args)
        degenerate = not total > 0.0
        u = min(max(raw, self.f_min), self.f_max)
        return FuzzyResult(float(u), float(total), degenerate)

    def infer(self, velocity: float, acceleration: float, distortion: float) -> float:
        """Damper command (N) for the given sprung-mass motion and distortion."""
        return self.evaluate(velocity, acceleration, distortion).u

    def nearest_level(self, u: float) -> Level:
        """Output level whose membership function is highest at ``u``."""
        return Level(int(np.argmax([bell(u, mf) for mf in self.output.mfs])))

