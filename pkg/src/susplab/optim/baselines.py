"""Comparison tuners: plain fruit fly, genetic algorithm, PSO, bacterial foraging.

Every method minimizes ``objective(PidGains)`` under a budget of objective
calls and is deterministic for a given seed. GA, PSO and BFO search the box
``[low, high]^3`` in the same unscaled coordinates the fruit fly searches use;
gains are ``coords * gain_scale``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .cfoa import radius_schedule
from .common import (Evaluator, OptResult, check_initial, decode_gains, location_dim,
                     sanitize)
from ..pid import PidGains

__all__ = [
    "BASELINE_CONFIGS",
    "BfoConfig",
    "FoaConfig",
    "GaConfig",
    "METHODS",
    "PsoConfig",
    "baseline_minimize",
    "bfo_minimize",
    "foa_minimize",
    "ga_minimize",
    "pso_minimize",
]


@dataclass(frozen=True)
class FoaConfig:
    """Plain fruit fly search: flies at ``L + r * radius * (2u - 1)``.

    With ``encoding="smell"`` each gain is the reciprocal distance of its own
    three coordinates to the origin, the classic smell-as-solution reading.
    """

    pop_size: int = 30
    max_iter: int = 200
    search_radius: float = 1.0
    final_radius_frac: float = 1e-3
    init_low: float = 0.0
    init_high: float = 2.0
    gain_scale: tuple = (1.0, 1.0, 1.0)
    encoding: str = "axis"
    seed: int = 0
    workers: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GaConfig:
    pop_size: int = 30
    tournament: int = 3
    blend_alpha: float = 0.5
    crossover_rate: float = 0.9
    mutation_rate: float = 0.2
    mutation_sigma: float = 0.1
    elite: int = 1
    low: float = 1e-6
    high: float = 2.0
    gain_scale: tuple = (1.0, 1.0, 1.0)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 30
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    vmax_frac: float = 0.2
    low: float = 1e-6
    high: float = 2.0
    gain_scale: tuple = (1.0, 1.0, 1.0)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BfoConfig:
    n_bacteria: int = 30
    n_chemotactic: int = 50
    swim_length: int = 4
    n_reproduction: int = 4
    n_elimination: int = 2
    p_eliminate: float = 0.25
    step_size: float = 0.05
    step_decay: float = 0.5
    low: float = 1e-6
    high: float = 2.0
    gain_scale: tuple = (1.0, 1.0, 1.0)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class _Budget(Exception):
    pass


class _Tracker:
    """Best-so-far bookkeeping under a hard evaluation budget."""

    def __init__(self, objective, budget, gain_scale, method):
        self.evaluate = Evaluator(objective)
        self.budget = budget
        self.scale = np.asarray(gain_scale, dtype=float)
        self.method = method
        self.best_score = np.inf
        self.best_x = None
        self.history = []
        self.first = True

    def __call__(self, xs) -> np.ndarray:
        xs = np.atleast_2d(xs)
        room = self.budget - self.evaluate.evals
        if room <= 0:
            raise _Budget
        xs = xs[:room]
        scores = self.evaluate(xs * self.scale)
        if self.first:
            check_initial(scores, xs * self.scale, self.method)
            self.first = False
        scores = sanitize(scores)
        k = int(np.argmin(scores))
        if scores[k] < self.best_score:
            self.best_score, self.best_x = float(scores[k]), xs[k].copy()
        return scores

    def mark(self):
        self.history.append(self.best_score)

    def result(self) -> OptResult:
        if not self.history or self.history[-1] != self.best_score:
            self.history.append(self.best_score)
        return OptResult(PidGains(*map(float, self.best_x * self.scale)), self.best_score,
                         np.array(self.history), self.evaluate.evals, self.method)


def foa_minimize(objective, cfg: FoaConfig = FoaConfig()) -> OptResult:
    rng = np.random.default_rng(cfg.seed)
    dim = location_dim(cfg.encoding)
    pop = cfg.pop_size
    radii = radius_schedule(cfg.search_radius, cfg.final_radius_frac, cfg.max_iter)
    evaluate = Evaluator(objective, cfg.workers)
    axis = rng.uniform(cfg.init_low, cfg.init_high, dim)

    def swarm(radius):
        r = rng.uniform(0.0, 1.0, (pop, dim))
        u = rng.uniform(0.0, 1.0, (pop, dim))
        flies = axis + r * (radius * (2.0 * u - 1.0))
        gains = []
        for i in range(pop):
            g = decode_gains(flies[i], cfg.encoding, cfg.gain_scale)
            tries = 0
            while g is None:
                tries += 1
                if tries > 100:
                    raise RuntimeError("could not resample a positive-gain candidate")
                step = radius * (2.0 * rng.uniform(0.0, 1.0, dim) - 1.0)
                flies[i] = axis + rng.uniform(0.0, 1.0, dim) * step
                g = decode_gains(flies[i], cfg.encoding, cfg.gain_scale)
            gains.append(g)
        return flies, np.array(gains)

    flies, gains = swarm(radii[0])
    smell = evaluate(gains)
    check_initial(smell, gains, "FOA")
    smell = sanitize(smell)
    k = int(np.argmin(smell))
    best, best_gains, axis = smell[k], gains[k], flies[k].copy()
    route, history = [axis.copy()], []
    for it in range(cfg.max_iter):
        flies, gains = swarm(radii[it + 1])
        smell = sanitize(evaluate(gains))
        k = int(np.argmin(smell))
        if smell[k] < best:
            best, best_gains, axis = smell[k], gains[k], flies[k].copy()
        route.append(axis.copy())
        history.append(best)
    return OptResult(PidGains(*map(float, best_gains)), float(best), np.array(history),
                     evaluate.evals, "FOA", np.array(route))


def ga_minimize(objective, budget: int, cfg: GaConfig = GaConfig()) -> OptResult:
    """Real-coded GA: tournament selection, blend (BLX-alpha) crossover,
    Gaussian mutation, elitism."""
    rng = np.random.default_rng(cfg.seed)
    lo, hi, n = cfg.low, cfg.high, cfg.pop_size
    sigma = cfg.mutation_sigma * (hi - lo)
    track = _Tracker(objective, budget, cfg.gain_scale, "GA")
    pop = rng.uniform(lo, hi, (n, 3))
    try:
        fit = track(pop)
        track.mark()
        while True:
            order = np.argsort(fit, kind="stable")
            children = [pop[i].copy() for i in order[:cfg.elite]]
            while len(children) < n:
                parents = []
                for _ in range(2):
                    idx = rng.integers(0, len(pop), cfg.tournament)
                    parents.append(pop[idx[np.argmin(fit[idx])]])
                a, b = parents
                if rng.uniform() < cfg.crossover_rate:
                    span = np.abs(a - b)
                    low = np.minimum(a, b) - cfg.blend_alpha * span
                    high = np.maximum(a, b) + cfg.blend_alpha * span
                    child = rng.uniform(low, high)
                else:
                    child = a.copy()
                mutate = rng.uniform(0.0, 1.0, 3) < cfg.mutation_rate
                child = child + mutate * rng.normal(0.0, sigma, 3)
                children.append(np.clip(child, lo, hi))
            new = np.array(children)
            new_fit = np.empty(n)
            new_fit[:cfg.elite] = fit[order[:cfg.elite]]
            scored = track(new[cfg.elite:])
            new_fit[cfg.elite:cfg.elite + scored.size] = scored
            if scored.size < n - cfg.elite:
                break
            pop, fit = new, new_fit
            track.mark()
    except _Budget:
        pass
    return track.result()


def pso_minimize(objective, budget: int, cfg: PsoConfig = PsoConfig()) -> OptResult:
    """Global-best PSO with constant inertia and velocity clamping."""
    rng = np.random.default_rng(cfg.seed)
    lo, hi, n = cfg.low, cfg.high, cfg.swarm_size
    vmax = cfg.vmax_frac * (hi - lo)
    track = _Tracker(objective, budget, cfg.gain_scale, "PSO")
    x = rng.uniform(lo, hi, (n, 3))
    v = rng.uniform(-vmax, vmax, (n, 3))
    try:
        f = track(x)
        pbest, pbest_f = x.copy(), f.copy()
        track.mark()
        while True:
            g = pbest[np.argmin(pbest_f)]
            r1 = rng.uniform(0.0, 1.0, (n, 3))
            r2 = rng.uniform(0.0, 1.0, (n, 3))
            v = cfg.inertia * v + cfg.cognitive * r1 * (pbest - x) + cfg.social * r2 * (g - x)
            v = np.clip(v, -vmax, vmax)
            x = np.clip(x + v, lo, hi)
            f = track(x)
            m = f.size
            better = f < pbest_f[:m]
            pbest[:m][better] = x[:m][better]
            pbest_f[:m][better] = f[better]
            if m < n:
                break
            track.mark()
    except _Budget:
        pass
    return track.result()


def bfo_minimize(objective, budget: int, cfg: BfoConfig = BfoConfig()) -> OptResult:
    """Bacterial foraging: tumble/swim chemotaxis, reproduction of the
    healthier half, random elimination-dispersal. The step size shrinks by
    ``step_decay`` after every reproduction round."""
    rng = np.random.default_rng(cfg.seed)
    lo, hi, n = cfg.low, cfg.high, cfg.n_bacteria
    step = cfg.step_size * (hi - lo)
    track = _Tracker(objective, budget, cfg.gain_scale, "BFO")
    x = rng.uniform(lo, hi, (n, 3))
    try:
        cost = track(x)
        track.mark()
        while True:
            for _ in range(cfg.n_elimination):
                for _ in range(cfg.n_reproduction):
                    health = cost.copy()
                    for _ in range(cfg.n_chemotactic):
                        d = rng.normal(0.0, 1.0, (n, 3))
                        d /= np.linalg.norm(d, axis=1, keepdims=True)
                        trial = np.clip(x + step * d, lo, hi)
                        trial_cost = track(trial)
                        moved = np.zeros(n, dtype=bool)
                        m = trial_cost.size
                        moved[:m] = trial_cost < cost[:m]
                        x[moved], cost[moved] = trial[moved], trial_cost[moved[:m]]
                        # swim: keep going along improving directions
                        for _ in range(cfg.swim_length):
                            if not moved.any():
                                break
                            idx = np.nonzero(moved)[0]
                            trial = np.clip(x[idx] + step * d[idx], lo, hi)
                            trial_cost = track(trial)
                            better = trial_cost < cost[idx[:trial_cost.size]]
                            keep = idx[:trial_cost.size][better]
                            x[keep], cost[keep] = trial[:trial_cost.size][better], trial_cost[better]
                            moved[:] = False
                            moved[keep] = True
                        health += cost
                        track.mark()
                    order = np.argsort(health, kind="stable")
                    half = n // 2
                    x[order[half:half * 2]] = x[order[:half]]
                    cost[order[half:half * 2]] = cost[order[:half]]
                    step *= cfg.step_decay
                disperse = rng.uniform(0.0, 1.0, n) < cfg.p_eliminate
                # never disperse the current best
                disperse[np.argmin(cost)] = False
                if disperse.any():
                    x[disperse] = rng.uniform(lo, hi, (int(disperse.sum()), 3))
                    cost[disperse] = track(x[disperse])
            step = cfg.step_size * (hi - lo)
    except _Budget:
        pass
    return track.result()


METHODS = {
    "FOA": foa_minimize,
    "GA": ga_minimize,
    "PSO": pso_minimize,
    "BFO": bfo_minimize,
}

BASELINE_CONFIGS = {"FOA": FoaConfig, "GA": GaConfig, "PSO": PsoConfig, "BFO": BfoConfig}


def baseline_minimize(method: str, objective, budget: int, seed: int = 0, cfg=None,
                      ) -> OptResult:
    """Run one comparison tuner with an evaluation budget.

    FOA spends the budget as ``pop_size`` initial flies plus whole swarms of
    ``pop_size`` per iteration. ``cfg`` overrides the method's default
    hyperparameters; ``seed`` always wins over ``cfg.seed``.
    """
    method = method.upper()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    cfg = cfg if cfg is not None else BASELINE_CONFIGS[method]()
    cfg = type(cfg)(**{**cfg.to_dict(), "seed": seed})
    if method == "FOA":
        pop = cfg.pop_size
        if budget < 2 * pop:
            raise ValueError(f"budget {budget} too small for FOA swarm of {pop}")
        cfg = FoaConfig(**{**cfg.to_dict(), "max_iter": budget // pop - 1})
        return foa_minimize(objective, cfg)
    size = getattr(cfg, "pop_size", None) or getattr(cfg, "swarm_size", None) or cfg.n_bacteria
    if budget < size:
        raise ValueError(f"budget {budget} smaller than population {size}")
    return METHODS[method](objective, budget, cfg)
