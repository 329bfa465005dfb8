"""scikit-learn style front ends over the functional core.

``FuzzyDamperController`` is a regressor-shaped view of the fuzzy system:
``predict`` maps rows of ``(velocity, acceleration, distortion)`` to damper
commands. ``PidTuner`` wraps the gain optimizers: ``fit`` takes an objective
over ``PidGains`` in place of training data.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .fuzzy import FuzzySystem, RuleBase
from .optim.baselines import BASELINE_CONFIGS, baseline_minimize
from .optim.cfoa import CfoaConfig, cfoa_minimize

__all__ = ["FuzzyDamperController", "PidTuner"]


class FuzzyDamperController(RegressorMixin, BaseEstimator):
    """Mamdani damper controller with the sklearn estimator protocol.

    ``fit`` only builds the inference system; nothing is learned. ``rules``
    may be a ``RuleBase`` or ``None`` for the default policy table.
    """

    def __init__(self, rules: RuleBase | None = None, table: str = "corrected",
                 n_points: int = 1001):
        self.rules = rules
        self.table = table
        self.n_points = n_points

    def fit(self, X=None, y=None):
        if X is not None:
            check_array(X, ensure_min_features=3)
        self.system_ = FuzzySystem.default(self.rules, self.table, n_points=self.n_points)
        self.n_features_in_ = 3
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "system_")
        X = check_array(X)
        if X.shape[1] != 3:
            raise ValueError(f"expected 3 columns (velocity, acceleration, distortion), got {X.shape[1]}")
        return np.array([self.system_.infer(*row) for row in X])


class PidTuner(BaseEstimator):
    """Gain tuner. ``method`` is ``"CFOA"`` or a baseline name.

    ``params`` holds method hyperparameters (``CfoaConfig`` or baseline
    config fields). CFOA spends ``pop_size * (max_iter + 1)`` evaluations;
    baselines spend ``budget``.
    """

    def __init__(self, method: str = "CFOA", budget: int = 6030, seed: int = 0,
                 params: dict | None = None):
        self.method = method
        self.budget = budget
        self.seed = seed
        self.params = params

    def fit(self, objective, y=None):
        if not callable(objective):
            raise TypeError("fit expects an objective callable over PidGains")
        params = dict(self.params or {})
        method = self.method.upper()
        if method == "CFOA":
            result = cfoa_minimize(objective, CfoaConfig(**{**params, "seed": self.seed}))
        else:
            if method not in BASELINE_CONFIGS:
                raise ValueError(f"unknown method {self.method!r}")
            cfg = BASELINE_CONFIGS[method](**params)
            result = baseline_minimize(method, objective, self.budget, self.seed, cfg)
        self.result_ = result
        self.best_gains_ = result.best_gains
        self.best_score_ = result.best_score
        return self

    def score(self, objective, y=None) -> float:
        """Negated objective at the fitted gains (higher is better)."""
        check_is_fitted(self, "best_gains_")
        return -float(objective(self.best_gains_))
