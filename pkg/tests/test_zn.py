import math

import numpy as np
import pytest

from susplab.optim import LtiPlant, ZnError, oscillation_growth, ultimate_point, zn_tune

CUBIC = ([1.0], [1.0, 3.0, 2.0, 0.0])


@pytest.fixture(scope="module")
def cubic():
    return LtiPlant(*CUBIC, dt=1e-3, horizon=60.0)


def test_ultimate_point_closed_form(cubic):
    k_u, t_u = ultimate_point(cubic, 0.1, 100.0)
    assert k_u == pytest.approx(6.0, rel=0.05)
    assert t_u == pytest.approx(2 * math.pi / math.sqrt(2), rel=0.05)


def test_doubling_gain_halves_k_u(cubic):
    k1, _ = ultimate_point(cubic, 0.1, 100.0)
    k2, _ = ultimate_point(cubic.scaled(2.0), 0.1, 100.0)
    assert k2 == pytest.approx(k1 / 2, rel=1e-3)


def test_zn_gains(cubic):
    g = zn_tune(cubic, 0.1, 100.0)
    k_u, t_u = ultimate_point(cubic, 0.1, 100.0)
    assert g.kp == pytest.approx(0.6 * k_u)
    assert g.ki == pytest.approx(2 * g.kp / t_u)
    assert g.kd == pytest.approx(g.kp * t_u / 8)
    assert min(g.as_array()) > 0


def test_no_oscillation_raises():
    first_order = LtiPlant([1.0], [1.0, 1.0], horizon=20.0)
    with pytest.raises(ZnError):
        zn_tune(first_order, 0.1, 100.0)


def test_oscillating_at_low_bound_raises(cubic):
    with pytest.raises(ZnError):
        ultimate_point(cubic, 10.0, 100.0)


def test_growth_measure():
    t = np.linspace(0, 20, 20001)
    assert oscillation_growth(t, np.sin(3 * t)) == pytest.approx(1.0, rel=1e-3)
    assert oscillation_growth(t, np.exp(-0.1 * t) * np.sin(3 * t)) < 1
    assert oscillation_growth(t, np.exp(0.1 * t) * np.sin(3 * t)) > 1
    assert math.isnan(oscillation_growth(t, t))
    assert oscillation_growth(t, np.full_like(t, np.inf)) == math.inf


def test_plant_validation():
    with pytest.raises(ValueError):
        LtiPlant([1.0], [1.0, 1.0], dt=0.0)
