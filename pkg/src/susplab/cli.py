"""``susplab`` command line: road-gen, rules-dump, tune, simulate, compare.

Exit codes: 0 success, 1 usage or configuration error, 2 numeric failure.
Every run writes a JSON manifest that lists all of its output files before
any of them is written.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import SEED_ENV, ConfigError, LabConfig, load_config, parse_scenarios
from .dynamics import NumericalDivergenceError
from .fuzzy import FuzzySystem, RuleBase, build_rule_base
from .optim.baselines import baseline_minimize
from .optim.cfoa import CfoaConfig, cfoa_minimize
from .optim.common import OptimizationError
from .optim.zn import ZnError, zn_tune
from .pid import PidGains
from .road import estimate_psd, generate_profile, psd_value, write_profile_csv
from .sim import (CHANNELS, MODES, TuningProblem, compute_metrics, integrate_closed_loop,
                  linearized_plant, run_comparison)
from .svg import line_plot

__all__ = ["RunManifest", "main", "run_cli"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
_NUMERIC = (NumericalDivergenceError, OptimizationError, ZnError, ArithmeticError)
_PLOT_CHANNELS = ("z_s", "z_u", "v_s", "v_u", "a_s", "distortion", "tire_load", "f_d", "u_pid")
_OVERLAY_CHANNELS = ("a_s", "distortion", "tire_load", "f_d")
_UNITS = {"z_s": "m", "z_u": "m", "v_s": "m/s", "v_u": "m/s", "a_s": "m/s^2", "distortion": "m",
          "tire_load": "N", "f_d": "N", "u_pid": "N"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunManifest:
    """What a run read, what it resolved, and every file it writes."""

    command: str
    argv: list
    config_path: str
    config_sha256: str
    parameters: dict
    seeds: dict
    version: str
    output_dir: str
    outputs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"command": self.command, "argv": self.argv, "config_path": self.config_path,
                "config_sha256": self.config_sha256, "version": self.version,
                "seeds": self.seeds, "output_dir": self.output_dir, "outputs": self.outputs,
                "parameters": self.parameters}

    def write(self, path: Path) -> Path:
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        data = json.loads(Path(path).read_text())
        return cls(data["command"], data["argv"], data["config_path"], data["config_sha256"],
                   data["parameters"], data["seeds"], data["version"], data["output_dir"],
                   data["outputs"])


def _sha256(path) -> str:
    if not path:
        return ""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _add(p, *names, default=None, help="", shown=None, **kw):
    if shown is None:
        shown = "from config" if default is None else default
    p.add_argument(*names, default=default, help=f"{help} (default: {shown})", **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="susplab", description="Semi-active suspension control laboratory.")
    parser.add_argument("--version", action="version", version=f"susplab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def common(p, out_default="out", out_help="output directory"):
        _add(p, "--config", help="INI config file layered over the built-in defaults",
             default="built-in defaults", dest="config")
        _add(p, "--seed", type=int, help=f"master seed; overrides {SEED_ENV} and [run] seed")
        _add(p, "--out", default=out_default, help=out_help)
        _add(p, "--replay", default="none",
             help="re-run the command recorded in a manifest (other flags ignored)")

    p = sub.add_parser("road-gen", help="generate a road profile and its PSD check")
    common(p)
    _add(p, "--duration", type=float, help="profile length in s, [sim] duration")
    _add(p, "--velocity", type=float, help="vehicle speed in m/s, [sim] velocity")
    _add(p, "--dt", type=float, help="sample interval in s, [sim] dt")

    p = sub.add_parser("rules-dump", help="write the 729-rule table as CSV")
    common(p, "rules.csv", "output CSV file; the manifest goes next to it")

    p = sub.add_parser("tune", help="tune PID gains on the closed-loop objective")
    common(p)
    _add(p, "--method", choices=["CFOA", "FOA", "GA", "PSO", "BFO", "ZN"],
         help="tuner, [tuning] method")
    _add(p, "--budget", type=int, help="evaluations for FOA/GA/PSO/BFO, [tuning] budget")

    p = sub.add_parser("simulate", help="simulate one closed-loop run")
    common(p)
    _add(p, "--mode", choices=list(MODES), help="control mode, [sim] mode")
    _add(p, "--duration", type=float, help="simulated time in s, [sim] duration")
    _add(p, "--gains", type=float, nargs=3, metavar=("KP", "KI", "KD"),
         help="PID gains", shown="tuned with [tuning] method")

    p = sub.add_parser("compare", help="run the scenario comparison")
    common(p)
    _add(p, "--reference", help="reference scenario label, [compare] reference")
    _add(p, "--scenarios", help="comma list of label:mode[:tuner], [compare] scenarios")
    _add(p, "--workers", type=int, help="parallel scenarios, [compare] workers")
    return parser


# -- workflows -----------------------------------------------------------

def _fuzzy(cfg: LabConfig) -> FuzzySystem:
    rules = RuleBase.from_csv(cfg.rules_path) if cfg.rules_path else None
    return FuzzySystem.default(rules, cfg.fuzzy_table, n_points=cfg.fuzzy_points)


def _road(cfg: LabConfig, duration=None, velocity=None, dt=None):
    sim = cfg.sim
    return generate_profile(cfg.road_spec(), velocity or sim.velocity, dt or sim.dt,
                            duration or sim.duration)


def _tune(cfg: LabConfig, method: str, budget: int, fuzzy, road):
    """Return ``(gains, OptResult or None)``."""
    if method == "ZN":
        return zn_tune(linearized_plant(cfg.suspension, cfg.sim.dt, cfg.zn_actuator_lag),
                       1e-2, 1e7), None
    problem = TuningProblem(cfg.suspension, fuzzy, road, cfg.sim, cfg.judgment)
    scale = tuple(cfg.gain_scale)
    if method == "CFOA":
        c = CfoaConfig(**{**cfg.cfoa.to_dict(), "seed": cfg.seed, "gain_scale": scale})
        res = cfoa_minimize(problem, c)
    else:
        base = cfg.baselines[method]
        base = type(base)(**{**base.to_dict(), "gain_scale": scale})
        res = baseline_minimize(method, problem, budget, cfg.seed, base)
    return res.best_gains, res


def _write_gains(path, gains: PidGains, score=None):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kp", "ki", "kd", "score"])
        w.writerow([repr(gains.kp), repr(gains.ki), repr(gains.kd),
                    "" if score is None else repr(float(score))])


def _write_metrics(path, metrics):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        d = metrics.to_dict()
        w.writerow(list(d))
        w.writerow([repr(float(v)) for v in d.values()])


def _plan_road_gen(args, cfg, out):
    return [out / "road.csv", out / "road_psd.csv", out / "road.svg", out / "road_psd.svg"]


def _do_road_gen(args, cfg, out):
    road = _road(cfg, args.duration, args.velocity, args.dt)
    write_profile_csv(road, out / "road.csv")
    freq, est = estimate_psd(road)
    keep = freq > 0
    freq, est = freq[keep], est[keep]
    target = psd_value(cfg.road_spec(), freq)
    with (out / "road_psd.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega_cycles_per_m", "psd_estimate", "psd_target"])
        for row in zip(freq, est, target):
            w.writerow([repr(float(v)) for v in row])
    line_plot(out / "road.svg", road.time, {"z_g": road.samples}, "Road profile", "time (s)",
              "elevation (m)")
    line_plot(out / "road_psd.svg", np.log10(freq), {"estimate": np.log10(est),
                                                     "target": np.log10(target)},
              "Road PSD", "log10 spatial frequency (cycles/m)", "log10 PSD (m^3)")
    print(f"road: {road.samples.size} samples, std {road.samples.std():.4g} m -> {out}")
    return EXIT_OK


def _plan_rules(args, cfg, out):
    return [out]


def _do_rules(args, cfg, out):
    fuzzy = _fuzzy(cfg)
    rules = fuzzy.rules if cfg.rules_path else build_rule_base(
        (fuzzy.velocity, fuzzy.acceleration, fuzzy.distortion, fuzzy.output))
    rules.to_csv(out)
    print(f"wrote {len(rules)} rules to {out}")
    return EXIT_OK


def _plan_tune(args, cfg, out):
    files = [out / "gains.csv"]
    if (args.method or cfg.tune_method) != "ZN":
        files += [out / "convergence.csv", out / "convergence.svg"]
    return files


def _do_tune(args, cfg, out):
    method = args.method or cfg.tune_method
    fuzzy = _fuzzy(cfg)
    road = _road(cfg)
    gains, res = _tune(cfg, method, args.budget or cfg.budget, fuzzy, road)
    _write_gains(out / "gains.csv", gains, None if res is None else res.best_score)
    if res is not None:
        res.to_csv(out / "convergence.csv")
        line_plot(out / "convergence.svg", np.arange(res.history.size), {method: res.history},
                  f"{method} convergence", "iteration", "best judgment value")
    print(f"{method}: kp={gains.kp:.6g} ki={gains.ki:.6g} kd={gains.kd:.6g}")
    return EXIT_OK


def _plan_simulate(args, cfg, out):
    mode = args.mode or cfg.sim.mode
    files = [out / "timeseries.csv", out / "metrics.csv"]
    if mode == "semi_active_fuzzy_pid":
        files.append(out / "gains.csv")
    files += [out / f"{c}.svg" for c in _PLOT_CHANNELS]
    return files


def _do_simulate(args, cfg, out):
    sim = cfg.sim.replace(mode=args.mode or cfg.sim.mode,
                          duration=args.duration or cfg.sim.duration)
    fuzzy = _fuzzy(cfg)
    road = _road(cfg, duration=sim.duration)
    gains = None
    if sim.mode == "semi_active_fuzzy_pid":
        if args.gains:
            try:
                gains = PidGains(*args.gains)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            _write_gains(out / "gains.csv", gains)
        else:
            gains, res = _tune(cfg, cfg.tune_method, cfg.budget, fuzzy, road)
            _write_gains(out / "gains.csv", gains, None if res is None else res.best_score)
    ts = integrate_closed_loop(cfg.suspension, fuzzy, gains, road, sim)
    ts.to_csv(out / "timeseries.csv")
    metrics = compute_metrics(ts, cfg.settle_skip)
    _write_metrics(out / "metrics.csv", metrics)
    for c in _PLOT_CHANNELS:
        line_plot(out / f"{c}.svg", ts.time, {c: ts.channel(c)}, f"{c} ({sim.mode})",
                  "time (s)", f"{c} ({_UNITS[c]})")
    print(f"{sim.mode}: rms_accel={metrics.rms_accel:.4g} m/s^2 "
          f"peak_distortion={metrics.peak_distortion:.4g} m")
    return EXIT_OK


def _compare_setup(args, cfg):
    scenarios = cfg.scenarios
    if args.scenarios:
        try:
            scenarios = parse_scenarios(args.scenarios)
        except ConfigError as exc:
            raise UsageError(str(exc)) from None
    reference = args.reference or cfg.reference
    labels = [s.label for s in scenarios]
    if len(scenarios) < 2:
        raise UsageError("compare needs at least two scenarios")
    if len(set(labels)) != len(labels):
        raise UsageError("scenario labels must be unique")
    if reference not in labels:
        raise UsageError(f"reference scenario {reference!r} is not among {labels}")
    for s in scenarios:
        if s.mode == "semi_active_fuzzy_pid" and s.tuner is None:
            raise UsageError(f"scenario {s.label!r} needs a tuner")
    return scenarios, reference


def _safe(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in label)


def _plan_compare(args, cfg, out):
    scenarios, _ = _compare_setup(args, cfg)
    files = [out / "comparison.csv", out / "comparison.txt"]
    for s in scenarios:
        files.append(out / f"timeseries_{_safe(s.label)}.csv")
        if s.tuner not in (None, "ZN"):
            files.append(out / f"convergence_{_safe(s.label)}.csv")
    files += [out / f"overlay_{c}.svg" for c in _OVERLAY_CHANNELS]
    if any(s.tuner not in (None, "ZN") for s in scenarios):
        files.append(out / "convergence.svg")
    return files


def _do_compare(args, cfg, out):
    scenarios, reference = _compare_setup(args, cfg)
    road = _road(cfg)
    table = run_comparison(scenarios, road, cfg.suspension, _fuzzy(cfg), cfg.sim, reference,
                           cfg.tuner_settings(), cfg.settle_skip, args.workers or cfg.workers)
    table.to_csv(out / "comparison.csv")
    text = table.render()
    (out / "comparison.txt").write_text(text + "\n")
    for row in table.rows:
        name = _safe(row.label)
        if row.series is not None:
            row.series.to_csv(out / f"timeseries_{name}.csv")
        else:
            # failed rows still get their declared file, header only
            (out / f"timeseries_{name}.csv").write_text(",".join(CHANNELS) + "\n")
        if row.tuner not in (None, "ZN"):
            path = out / f"convergence_{name}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["iteration", "best_score"])
                for i, v in enumerate(row.history if row.history is not None else []):
                    w.writerow([i, repr(float(v))])
    ok = [r for r in table.rows if r.series is not None]
    for c in _OVERLAY_CHANNELS:
        if ok:
            line_plot(out / f"overlay_{c}.svg", ok[0].series.time,
                      {r.label: r.series.channel(c) for r in ok}, f"{c} by scenario",
                      "time (s)", f"{c} ({_UNITS[c]})")
        else:
            line_plot(out / f"overlay_{c}.svg", [0.0], {"none": [0.0]}, f"{c}: no runs")
    tuned = [r for r in table.rows if r.history is not None and r.history.size]
    if any(s.tuner not in (None, "ZN") for s in scenarios):
        width = max((r.history.size for r in tuned), default=1)
        curves = {}
        for r in tuned:
            h = np.full(width, np.nan)
            h[:r.history.size] = r.history
            h[r.history.size:] = r.history[-1]
            curves[r.label] = h
        line_plot(out / "convergence.svg", np.arange(width), curves or {"none": np.zeros(width)},
                  "Tuner convergence", "iteration", "best judgment value")
    print(text)
    failed = [r for r in table.rows if r.failed]
    for r in failed:
        print(f"scenario {r.label} failed: {r.error}", file=sys.stderr)
    return EXIT_NUMERIC if failed else EXIT_OK


_COMMANDS = {
    "road-gen": (_plan_road_gen, _do_road_gen),
    "rules-dump": (_plan_rules, _do_rules),
    "tune": (_plan_tune, _do_tune),
    "simulate": (_plan_simulate, _do_simulate),
    "compare": (_plan_compare, _do_compare),
}


def _manifest_path(command: str, out: Path) -> Path:
    if command == "rules-dump":
        return out.with_name(out.stem + ".manifest.json")
    return out / "manifest.json"


def _replay_argv(path) -> list:
    try:
        manifest = RunManifest.read(path)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read manifest {path}: {exc}") from None
    if manifest.config_path and _sha256(manifest.config_path) != manifest.config_sha256:
        raise UsageError(f"config {manifest.config_path} changed since the manifest was written")
    return list(manifest.argv)


def _execute(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise UsageError("susplab: error: a subcommand is required")
    if args.replay != "none":
        argv = _replay_argv(args.replay)
        args = parser.parse_args(argv)
        if args.replay != "none":
            raise UsageError("a replayed manifest cannot itself request a replay")
    config_path = None if args.config == "built-in defaults" else args.config
    try:
        cfg = load_config(config_path, seed=args.seed)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    if cfg.rules_path and not Path(cfg.rules_path).is_file():
        raise UsageError(f"rules file not found: {cfg.rules_path}")

    plan, run = _COMMANDS[args.command]
    out = Path(args.out)
    files = plan(args, cfg, out)
    target_dir = out.parent if args.command == "rules-dump" else out
    target_dir.mkdir(parents=True, exist_ok=True)
    mpath = _manifest_path(args.command, out)
    manifest = RunManifest(
        command=args.command, argv=list(argv),
        config_path=str(Path(config_path).resolve()) if config_path else "",
        config_sha256=_sha256(config_path), parameters=cfg.snapshot(),
        seeds={"seed": cfg.seed, "road": cfg.seed, "tuners": cfg.seed},
        version=__version__, output_dir=str(target_dir),
        outputs=[str(mpath.name)] + [str(f.relative_to(target_dir)) for f in files])
    manifest.write(mpath)
    return run(args, cfg, out)


def run_cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return _execute(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERIC as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main():
    sys.exit(run_cli())
