"""Sectioned INI configuration for the command-line workflows.

The packaged ``default.cfg`` is read first, then the user file on top. Key
names match the dataclass fields they feed. ``SUSPLAB_SEED`` in the
environment overrides ``[run] seed``.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

from .dynamics import SuspensionParams
from .optim.baselines import BfoConfig, FoaConfig, GaConfig, PsoConfig
from .optim.cfoa import CfoaConfig
from .pid import JudgmentWeights
from .road import RoadSpec
from .sim import Scenario, SimConfig, TunerSettings

__all__ = ["ConfigError", "LabConfig", "SEED_ENV", "default_config_text", "load_config",
           "parse_scenarios"]

SEED_ENV = "SUSPLAB_SEED"

_SECTIONS = {
    "suspension": SuspensionParams,
    "road": RoadSpec,
    "sim": SimConfig,
    "judgment": JudgmentWeights,
    "cfoa": CfoaConfig,
    "foa": FoaConfig,
    "ga": GaConfig,
    "pso": PsoConfig,
    "bfo": BfoConfig,
}
_EXTRA = {
    "run": {"seed": int},
    "fuzzy": {"table": str, "n_points": int, "rules": str},
    "metrics": {"settle_skip": float},
    "tuning": {"budget": int, "gain_scale": tuple, "zn_actuator_lag": float, "method": str},
    "compare": {"scenarios": str, "reference": str, "workers": int},
}
# seeds come from [run] only
_SEEDLESS = {"road", "cfoa", "foa", "ga", "pso", "bfo"}


class ConfigError(ValueError):
    pass


def default_config_text() -> str:
    return resources.files("susplab").joinpath("data/default.cfg").read_text()


def _coerce(raw: str, kind, key: str):
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is tuple:
            return tuple(float(v) for v in raw.split(","))
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def _field_kinds(cls) -> dict:
    kinds = {}
    defaults = cls()
    for f in fields(cls):
        value = getattr(defaults, f.name)
        kinds[f.name] = type(value) if not isinstance(value, tuple) else tuple
    return kinds


def parse_scenarios(text: str) -> list:
    out = []
    for item in (s.strip() for s in text.replace("\n", ",").split(",")):
        if not item:
            continue
        parts = [p.strip() for p in item.split(":")]
        if len(parts) not in (2, 3):
            raise ConfigError(f"scenario {item!r} must be label:mode[:tuner]")
        tuner = parts[2] if len(parts) == 3 and parts[2] else None
        try:
            out.append(Scenario(parts[0], parts[1], tuner))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return out


@dataclass
class LabConfig:
    seed: int = 0
    suspension: SuspensionParams = field(default_factory=SuspensionParams)
    road: RoadSpec = field(default_factory=RoadSpec)
    sim: SimConfig = field(default_factory=SimConfig)
    judgment: JudgmentWeights = field(default_factory=JudgmentWeights)
    cfoa: CfoaConfig = field(default_factory=CfoaConfig)
    baselines: dict = field(default_factory=dict)
    fuzzy_table: str = "corrected"
    fuzzy_points: int = 1001
    rules_path: str = ""
    settle_skip: float = 1.0
    budget: int = 300
    gain_scale: tuple = (100.0, 100.0, 10.0)
    zn_actuator_lag: float = 0.01
    tune_method: str = "CFOA"
    scenarios: list = field(default_factory=list)
    reference: str = "active"
    workers: int = 1
    source: str = "<defaults>"

    def tuner_settings(self) -> TunerSettings:
        return TunerSettings(budget=self.budget, gain_scale=tuple(self.gain_scale),
                             cfoa=self.cfoa, baselines=dict(self.baselines),
                             weights=self.judgment, zn_actuator_lag=self.zn_actuator_lag,
                             seed=self.seed)

    def road_spec(self) -> RoadSpec:
        return RoadSpec(**{**self.road.to_dict(), "seed": self.seed})

    def snapshot(self) -> dict:
        """Resolved parameters, JSON-serializable."""
        return {
            "seed": self.seed,
            "suspension": self.suspension.to_dict(),
            "road": self.road_spec().to_dict(),
            "sim": self.sim.to_dict(),
            "judgment": self.judgment.to_dict(),
            "cfoa": {**self.cfoa.to_dict(), "seed": self.seed},
            "baselines": {k: {**v.to_dict(), "seed": self.seed} for k, v in self.baselines.items()},
            "fuzzy": {"table": self.fuzzy_table, "n_points": self.fuzzy_points,
                      "rules": self.rules_path},
            "metrics": {"settle_skip": self.settle_skip},
            "tuning": {"budget": self.budget, "gain_scale": list(self.gain_scale),
                       "zn_actuator_lag": self.zn_actuator_lag, "method": self.tune_method},
            "compare": {"scenarios": [asdict(s) for s in self.scenarios],
                        "reference": self.reference, "workers": self.workers},
        }


def load_config(path=None, seed: int | None = None, env=None) -> LabConfig:
    """Read defaults, then ``path``; seed precedence is ``seed`` argument,
    then ``SUSPLAB_SEED``, then the file."""
    env = os.environ if env is None else env
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(default_config_text(), source="default.cfg")
    source = "<defaults>"
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read_string(path.read_text(), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        source = str(path)

    known = set(_SECTIONS) | set(_EXTRA)
    unknown = [s for s in parser.sections() if s not in known]
    if unknown:
        raise ConfigError(f"unknown config section(s): {unknown}")

    built = {}
    for name, cls in _SECTIONS.items():
        kinds = _field_kinds(cls)
        values = {}
        if parser.has_section(name):
            for key, raw in parser.items(name):
                if key not in kinds or (key == "seed" and name in _SEEDLESS):
                    raise ConfigError(f"unknown key [{name}] {key}")
                values[key] = _coerce(raw, kinds[key], f"[{name}] {key}")
        try:
            built[name] = cls(**values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{name}]: {exc}") from None

    extra = {}
    for name, kinds in _EXTRA.items():
        if parser.has_section(name):
            for key, raw in parser.items(name):
                if key not in kinds:
                    raise ConfigError(f"unknown key [{name}] {key}")
                extra[(name, key)] = _coerce(raw, kinds[key], f"[{name}] {key}")

    file_seed = extra.get(("run", "seed"), 0)
    if seed is None and env.get(SEED_ENV, "").strip():
        try:
            seed = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None
    cfg = LabConfig(
        seed=file_seed if seed is None else seed,
        suspension=built["suspension"],
        road=built["road"],
        sim=built["sim"],
        judgment=built["judgment"],
        cfoa=built["cfoa"],
        baselines={"FOA": built["foa"], "GA": built["ga"], "PSO": built["pso"], "BFO": built["bfo"]},
        fuzzy_table=extra.get(("fuzzy", "table"), "corrected"),
        fuzzy_points=extra.get(("fuzzy", "n_points"), 1001),
        rules_path=extra.get(("fuzzy", "rules"), ""),
        settle_skip=extra.get(("metrics", "settle_skip"), 1.0),
        budget=extra.get(("tuning", "budget"), 300),
        gain_scale=extra.get(("tuning", "gain_scale"), (100.0, 100.0, 10.0)),
        zn_actuator_lag=extra.get(("tuning", "zn_actuator_lag"), 0.01),
        tune_method=extra.get(("tuning", "method"), "CFOA").upper(),
        scenarios=parse_scenarios(extra.get(("compare", "scenarios"), "")),
        reference=extra.get(("compare", "reference"), "active"),
        workers=extra.get(("compare", "workers"), 1),
        source=source,
    )
    if len(cfg.gain_scale) != 3 or min(cfg.gain_scale) <= 0:
        raise ConfigError("[tuning] gain_scale needs three positive values")
    if cfg.fuzzy_table not in ("corrected", "literal"):
        raise ConfigError("[fuzzy] table must be 'corrected' or 'literal'")
    if cfg.tune_method not in ("CFOA", "FOA", "GA", "PSO", "BFO", "ZN"):
        raise ConfigError(f"[tuning] unknown method {cfg.tune_method!r}")
    return cfg
