import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from susplab.estimators import FuzzyDamperController, PidTuner
from susplab.pid import PidGains


def sphere(g: PidGains) -> float:
    return float(np.sum((g.as_array() - 1.0) ** 2))


def test_controller_predict_matches_system(fuzzy):
    X = np.array([[0.1, 2.0, 0.3], [-1.0, -9.0, 0.0193]])
    est = FuzzyDamperController().fit()
    np.testing.assert_array_equal(est.predict(X), [fuzzy.infer(*row) for row in X])


def test_controller_protocol():
    est = FuzzyDamperController(n_points=501)
    assert clone(est).get_params()["n_points"] == 501
    with pytest.raises(NotFittedError):
        est.predict(np.zeros((1, 3)))
    est.fit(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        est.predict(np.zeros((1, 2)))


@pytest.mark.parametrize("method,params", [("CFOA", dict(pop_size=6, max_iter=10)),
                                           ("pso", dict(swarm_size=6))])
def test_tuner_fit_score(method, params):
    tuner = PidTuner(method, budget=60, seed=2, params=params).fit(sphere)
    assert tuner.best_score_ == tuner.result_.best_score
    assert tuner.score(sphere) == -tuner.best_score_
    again = clone(tuner).fit(sphere)
    assert again.best_gains_ == tuner.best_gains_


def test_tuner_errors():
    with pytest.raises(TypeError):
        PidTuner().fit(np.zeros(3))
    with pytest.raises(ValueError):
        PidTuner("SA").fit(sphere)
    with pytest.raises(NotFittedError):
        PidTuner().score(sphere)
