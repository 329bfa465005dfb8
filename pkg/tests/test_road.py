import numpy as np
import pytest

from susplab.road import (RoadProfile, RoadSpec, band_variance, estimate_psd, generate_profile,
                          psd_value, read_profile_csv, write_profile_csv)


@pytest.mark.parametrize("omega,expected", [(0.1, 256e-6), (0.4, 32e-6), (0.025, 4.096e-3)])
def test_psd_value_examples(omega, expected):
    assert psd_value(RoadSpec(), omega) == pytest.approx(expected, rel=1e-12)


def test_psd_continuous_at_reference():
    spec = RoadSpec()
    eps = 1e-12
    assert psd_value(spec, 0.1 - eps) == pytest.approx(psd_value(spec, 0.1 + eps), rel=1e-9)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_psd_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        psd_value(RoadSpec(), bad)


@pytest.mark.parametrize("kw", [dict(c_ref=-1), dict(omega_min=0.2), dict(n_harmonics=0),
                                dict(omega_max=0.05)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        RoadSpec(**kw)


def test_band_variance_matches_quadrature():
    from scipy.integrate import quad
    spec = RoadSpec()
    lo = quad(lambda w: psd_value(spec, w), spec.omega_min, spec.omega_ref, limit=200)[0]
    hi = quad(lambda w: psd_value(spec, w), spec.omega_ref, spec.omega_max, limit=200)[0]
    assert band_variance(spec) == pytest.approx(lo + hi, rel=1e-9)


def test_generate_deterministic_and_seeded():
    a = generate_profile(RoadSpec(seed=3), 20.0, 1e-3, 2.0)
    b = generate_profile(RoadSpec(seed=3), 20.0, 1e-3, 2.0)
    c = generate_profile(RoadSpec(seed=4), 20.0, 1e-3, 2.0)
    assert a == b
    assert not np.array_equal(a.samples, c.samples)


def test_zero_roughness_is_flat():
    prof = generate_profile(RoadSpec(c_ref=0.0), 20.0, 1e-3, 1.0)
    assert np.all(prof.samples == 0.0)


def test_amplitude_scales_with_sqrt_roughness():
    a = generate_profile(RoadSpec(seed=1), 20.0, 1e-3, 5.0)
    b = generate_profile(RoadSpec(seed=1, c_ref=4 * 256e-6), 20.0, 1e-3, 5.0)
    np.testing.assert_allclose(b.samples, 2.0 * a.samples, rtol=1e-12, atol=1e-15)


def test_profile_mean_near_zero():
    prof = generate_profile(RoadSpec(seed=2), 20.0, 1e-3, 100.0)
    z = prof.samples
    assert abs(z.mean()) < 3 * z.std() / np.sqrt(z.size)


@pytest.mark.parametrize("args", [(0.0, 1e-3, 1.0), (20.0, 0.0, 1.0), (20.0, 1e-3, 1e-4)])
def test_generate_rejects_bad_args(args):
    with pytest.raises(ValueError):
        generate_profile(RoadSpec(), *args)


def test_profile_validation():
    with pytest.raises(ValueError):
        RoadProfile(1e-3, np.array([0.0]), 20.0)
    with pytest.raises(ValueError):
        RoadProfile(1e-3, np.array([0.0, np.inf]), 20.0)
    with pytest.raises(ValueError):
        RoadProfile(0.0, np.zeros(4), 20.0)


def test_estimate_psd_single_sinusoid_parseval():
    dt, v, n = 1e-3, 20.0, 2 ** 16
    omega_star = 0.5
    A = 0.01
    t = np.arange(n) * dt
    prof = RoadProfile(dt, A * np.sin(2 * np.pi * omega_star * v * t), v)
    omega, power = estimate_psd(prof)
    k = int(np.argmax(power))
    d_omega = omega[1] - omega[0]
    assert abs(omega[k] - omega_star) <= d_omega
    assert np.sum(power) * d_omega == pytest.approx(A ** 2 / 2, rel=0.10)


def test_estimate_psd_zero_and_short():
    omega, power = estimate_psd(RoadProfile(1e-3, np.zeros(256), 20.0))
    assert np.all(power == 0)
    with pytest.raises(ValueError):
        estimate_psd(RoadProfile(1e-3, np.zeros(63), 20.0))
    with pytest.raises(ValueError):
        estimate_psd(RoadProfile(1e-3, np.zeros(256), 20.0), nperseg=128)


def test_csv_roundtrip(tmp_path):
    prof = generate_profile(RoadSpec(seed=5), 20.0, 1e-3, 0.5)
    path = write_profile_csv(prof, tmp_path / "road.csv")
    text = path.read_bytes()
    assert text.startswith(b"time_s,elevation_m\n") and b"\r" not in text
    back = read_profile_csv(path, 20.0)
    np.testing.assert_array_equal(back.samples, prof.samples)
    assert back.dt == pytest.approx(prof.dt)


def test_csv_rejects_nonuniform(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time_s,elevation_m\n0,0\n0.001,0\n0.003,0\n")
    with pytest.raises(ValueError):
        read_profile_csv(path, 20.0)
