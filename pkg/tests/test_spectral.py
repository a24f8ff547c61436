import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optochaos.dynamics import cumulative_trapezoid
from optochaos.errors import DomainError, InsufficientDataError
from optochaos.pipeline import tone_signal
from optochaos.spectral import (CONVENTION, PowerSpectrum, decouple_signal,
                                decoupling_factor_direct, decoupling_factor_spectral,
                                estimate_psd, mode_spectrum, mode_spectrum_db,
                                peak_prominence_db, spectral_flatness, write_db_csv)

OMEGA0 = 2 * math.pi * 10.0
DT = 1 / 2000.0  # 200 samples per period of OMEGA0


def bessel_j0(x, terms=40):
    """Power series of the zeroth Bessel function."""
    return sum((-1) ** k * (x / 2) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms))


def tone(ratio, periods=1000):
    return tone_signal(ratio * OMEGA0, OMEGA0, periods * 2 * math.pi / OMEGA0, DT)


def broadband(seed, var_theta=3.0, n=2 ** 21, dt=1e-3, band=(50.0, 150.0)):
    """Gaussian noise confined to ``band`` and scaled so that var(theta) = var_theta."""
    rng = np.random.default_rng(seed)
    w = 2 * math.pi * np.fft.rfftfreq(n, dt)
    spec = (rng.normal(size=w.size) + 1j * rng.normal(size=w.size)) * ((w > band[0]) & (w < band[1]))
    f = np.fft.irfft(spec, n)
    theta = cumulative_trapezoid(f - f.mean(), dt)
    return f * math.sqrt(var_theta / np.var(theta)), dt


def test_bessel_oracle_sanity():
    assert bessel_j0(1.0) ** 2 == pytest.approx(0.5855275, abs=1e-7)
    assert bessel_j0(0.0) == 1.0


def test_zero_signal_has_zero_density():
    psd = estimate_psd(np.zeros(4096), 1e-3)
    assert np.all(psd.density == 0)
    assert psd.convention_tag == CONVENTION
    assert decoupling_factor_spectral(psd) == 1.0


def test_constant_signal():
    f = np.full(4096, 3.7)
    assert decoupling_factor_direct(f, 1e-3) == 1.0
    res = decouple_signal(f, 1e-3)
    assert res.m_spectral == 1.0 and res.mean_f == pytest.approx(3.7)


def test_psd_axis():
    psd = estimate_psd(np.random.default_rng(0).normal(size=8000), 1e-3, segment_length=1000)
    assert psd.omega[0] == pytest.approx(2 * math.pi / 1.0)
    assert psd.omega[-1] == pytest.approx(math.pi / 1e-3)
    assert np.all(np.diff(psd.omega) > 0)


def test_tone_integral_convention():
    psd = estimate_psd(tone_signal(2.0, OMEGA0, 50.0, DT), DT)
    assert psd.integral() == pytest.approx(4 / (2 * math.pi), rel=0.01)


def test_two_tones_add():
    a = tone_signal(2.0, OMEGA0, 50.0, DT)
    b = tone_signal(0.7, 3.3 * OMEGA0, 50.0, DT)
    total = estimate_psd(a + b, DT).integral()
    parts = estimate_psd(a, DT).integral() + estimate_psd(b, DT).integral()
    assert total == pytest.approx(parts, rel=0.02)


def test_single_tone_spectral_closed_form():
    assert decoupling_factor_spectral(estimate_psd(tone(0.1), DT)) == pytest.approx(
        math.exp(-0.005), abs=1e-5)


@pytest.mark.parametrize("ratio", [0.01, 0.05, 0.1])
def test_small_tone_ladder(ratio):
    res = decouple_signal(tone(ratio), DT)
    want = bessel_j0(ratio) ** 2
    assert abs(res.m_spectral - want) <= 1e-4
    assert abs(res.m_direct - want) <= 1e-4


def test_large_tone_direct_only():
    res = decouple_signal(tone(1.0), DT)
    want = bessel_j0(1.0) ** 2
    assert abs(res.m_direct - want) <= 1e-4
    # small-amplitude expansion no longer holds
    assert abs(res.m_spectral - want) > 1e-3


@pytest.mark.parametrize("seed", range(3))
def test_broadband_dual_estimator_agreement(seed):
    f, dt = broadband(seed)
    res = decouple_signal(f, dt)
    assert res.m_direct == pytest.approx(math.exp(-3.0), rel=0.1)
    assert res.m_spectral == pytest.approx(math.exp(-3.0), rel=0.1)
    assert 0.5 <= res.m_spectral / res.m_direct <= 2.0


@pytest.mark.parametrize("c", [0.25, 3.0, 40.0])
def test_scale_covariance(c):
    f = tone(0.3, periods=200) + 0.5 * tone(0.1, periods=200)[::-1]
    base = decouple_signal(f, DT)
    scaled = decouple_signal(c * f, DT / c)
    assert scaled.m_direct == pytest.approx(base.m_direct, rel=1e-12)
    assert scaled.m_spectral == pytest.approx(base.m_spectral, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=63), st.floats(min_value=0.0, max_value=10.0))
def test_adding_density_never_increases_m(index, extra):
    psd = estimate_psd(tone(0.2, periods=100), DT, segment_length=2048)
    more = psd.density.copy()
    more[index] += extra
    bumped = PowerSpectrum(psd.omega, more)
    assert decoupling_factor_spectral(bumped) <= decoupling_factor_spectral(psd)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1),
       st.floats(min_value=0.0, max_value=50.0))
def test_m_bounds(seed, scale):
    f = scale * np.random.default_rng(seed).normal(size=1024)
    res = decouple_signal(f, 1e-2)
    assert 0 < res.m_spectral <= 1
    assert 0 < res.m_direct <= 1


def test_band_limits():
    psd = estimate_psd(tone(0.1), DT)
    inside = decoupling_factor_spectral(psd, 0.5 * OMEGA0, 1.5 * OMEGA0)
    outside = decoupling_factor_spectral(psd, 3 * OMEGA0, 5 * OMEGA0)
    assert inside == pytest.approx(math.exp(-0.005), abs=1e-5)
    assert outside == pytest.approx(1.0, abs=1e-6)


def test_band_errors():
    psd = estimate_psd(tone(0.1), DT)
    with pytest.raises(DomainError):
        decoupling_factor_spectral(psd, 10.0, 5.0)
    with pytest.raises(DomainError):
        decoupling_factor_spectral(psd, 0.0, 5.0)
    with pytest.raises(DomainError):
        decoupling_factor_spectral(psd, 1.0, 2 * psd.omega[-1])
    with pytest.raises(DomainError):
        decoupling_factor_spectral(psd, psd.omega[3] + 1e-6, psd.omega[4] - 1e-6)


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        estimate_psd(np.ones(100), 1e-3, segment_length=64)
    with pytest.raises(InsufficientDataError):
        decoupling_factor_direct([1.0], 1e-3)
    with pytest.raises(InsufficientDataError):
        mode_spectrum(np.ones(255, complex), 1e-3)


def test_decoupling_result_json():
    res = decouple_signal(tone(0.1), DT)
    data = json.loads(res.to_json())
    assert set(data) == {"m_spectral", "m_direct", "omega_l", "omega_u", "mean_f"}


def test_rotation_has_dominant_line():
    n, dt, omega = 2 ** 15, 1e-3, 2 * math.pi * 125.0
    x = np.exp(-1j * omega * dt * np.arange(n))
    w, db = mode_spectrum_db(x, dt, segment_length=4096)
    assert w[np.argmax(db)] == pytest.approx(omega)
    assert peak_prominence_db(db) >= 40


def test_mode_spectrum_power():
    rng = np.random.default_rng(4)
    x = rng.normal(size=2 ** 14) + 1j * rng.normal(size=2 ** 14)
    w, dens = mode_spectrum(x, 1e-3, segment_length=1024)
    assert np.trapezoid(dens, w) == pytest.approx(np.mean(np.abs(x) ** 2), rel=0.02)


def test_mode_spectrum_db_reference():
    x = np.exp(-1j * 3.0 * np.arange(1024) * 1e-2)
    _, a = mode_spectrum_db(x, 1e-2, 1.0)
    _, b = mode_spectrum_db(x, 1e-2, 10.0)
    assert np.allclose(a - b, 10.0)
    with pytest.raises(DomainError):
        mode_spectrum_db(x, 1e-2, 0.0)


def test_db_csv(tmp_path):
    path = tmp_path / "s.csv"
    write_db_csv(path, np.array([1.0, 2.0]), np.array([-3.0, 0.5]))
    assert path.read_text().splitlines() == ["omega_rad_per_us,db", "1,-3", "2,0.5"]


def test_flatness_examples():
    assert spectral_flatness(np.full(64, 2.5)) == pytest.approx(1.0, rel=1e-12)
    line = np.zeros(64)
    line[10] = 1.0
    assert spectral_flatness(line) < 1e-200
    white = estimate_psd(np.random.default_rng(1).normal(size=2 ** 16), 1e-3)
    assert spectral_flatness(white) > 0.8
    with pytest.raises(DomainError):
        spectral_flatness(np.zeros(8))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=1, max_size=50).filter(
    lambda v: any(x > 0 for x in v)))
def test_flatness_in_unit_interval(values):
    assert 0 < spectral_flatness(np.array(values)) <= 1 + 1e-12
