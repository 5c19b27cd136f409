import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rase_lab.dsp import (
    FWHM_PER_SIGMA, DspConfig, VacuumCalibration, WindowSpec, build_window, carrier,
    demodulate_filter, extract_quadratures, gain_from_vacuum, gaussian_sigma_hz,
    integrate_window, noise_bandwidth_ratio,
)

FS = 50e6
DT = 1e6 / FS


@given(h=st.floats(1.0, 9.0), w=st.floats(50e3, 5e6), extra=st.floats(0.0, 3.0))
@settings(max_examples=40, deadline=None)
def test_window_symmetric_unit_energy(h, w, extra):
    win = build_window(WindowSpec(h, w, h / 2 + extra, 12.34), DT)
    v = win.values
    assert np.allclose(v, v[::-1], atol=1e-12)
    assert np.sum(v**2) * DT == pytest.approx(1.0)
    centre = win.start + len(v) // 2
    assert centre == round(12.34 / DT)


def test_window_truncated_at_cutoff():
    win = build_window(WindowSpec(7.0, 600e3, 5.0, 20.0), DT)
    assert len(win.values) == 2 * round(5.0 / DT) + 1
    dense = win.dense(2000)
    t = np.arange(2000) * DT
    assert np.all(dense[np.abs(t - 20.0) > 5.0 + 1e-9] == 0)


def test_infinite_width_is_top_hat():
    win = build_window(WindowSpec(7.0, math.inf, 5.0), DT)
    nz = win.values[win.values > 0]
    assert len(nz) == round(7.0 / DT) + 1
    assert np.allclose(nz[1:-1], nz[1])
    assert nz[0] == pytest.approx(nz[1] / 2) and nz[-1] == pytest.approx(nz[1] / 2)


def test_wide_gaussian_approaches_top_hat():
    top = build_window(WindowSpec(7.0, math.inf, 5.0), DT).values
    near = build_window(WindowSpec(7.0, 1e9, 5.0), DT).values
    assert np.max(np.abs(top - near)) < 1e-2 * top.max()


def test_cutoff_shorter_than_top_hat_rejected():
    with pytest.raises(ValueError):
        WindowSpec(7.0, 600e3, 3.0)


def test_width_conventions():
    assert gaussian_sigma_hz(500e3, "sigma") == 500e3
    assert gaussian_sigma_hz(500e3 * FWHM_PER_SIGMA, "fwhm") == pytest.approx(500e3)
    with pytest.raises(ValueError):
        gaussian_sigma_hz(1.0, "hwhm")


def test_tone_demodulates_to_constant():
    n = 4096
    c = 0.7 * np.exp(1j * 0.4)
    bb = demodulate_filter(c * carrier(n, 2e6, FS), 2e6, 500e3, FS)
    assert np.allclose(bb[200:-200], c, atol=1e-9)


def test_offset_tone_attenuation():
    n = 5000  # 10 kHz bins, so 1 MHz offset lands on a bin
    tone = carrier(n, 3e6, FS)
    bb = demodulate_filter(tone, 2e6, 500e3, FS)
    assert np.allclose(np.abs(bb), math.exp(-0.5 * 2**2), rtol=1e-9)


def test_white_noise_parseval(rng):
    n, sigma = 4096, 500e3
    x = rng.standard_normal((400, n)) + 1j * rng.standard_normal((400, n))
    y = demodulate_filter(x, 2e6, sigma, FS)
    ratio = np.var(y) / np.var(x)
    assert ratio == pytest.approx(noise_bandwidth_ratio(n, FS, sigma), rel=0.02)
    # analytic: integral of exp(-(f/sigma)^2) over the band, divided by fs
    assert ratio == pytest.approx(math.sqrt(math.pi) * sigma / FS, rel=0.02)


def test_nyquist_rejected():
    with pytest.raises(ValueError):
        demodulate_filter(np.zeros(16, complex), 30e6, 500e3, FS)


def test_linearity_and_phase_covariance(rng):
    n = 2000
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    win = build_window(WindowSpec(center_us=20.0), DT)
    bb = demodulate_filter(x, 2e6, 500e3, FS)
    x0, p0 = extract_quadratures(bb, win, 1.3)
    x2, p2 = extract_quadratures(demodulate_filter(2 * x, 2e6, 500e3, FS), win, 1.3)
    assert (x2, p2) == pytest.approx((2 * x0, 2 * p0))
    phi = 0.9
    xr, pr = extract_quadratures(demodulate_filter(np.exp(1j * phi) * x, 2e6, 500e3, FS), win, 1.3)
    rot = (x0 + 1j * p0) * np.exp(1j * phi)
    assert (xr, pr) == pytest.approx((rot.real, rot.imag))


def test_time_shift_invariance(rng):
    # shifting trace and window together leaves the integral unchanged, up to
    # the carrier phase accumulated over the shift
    n, k = 2000, 37
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    c = carrier(n, 2e6, FS)
    y = np.roll(x, k)
    z0 = integrate_window(demodulate_filter(x, 2e6, 500e3, FS), build_window(WindowSpec(center_us=20.0), DT))
    z1 = integrate_window(demodulate_filter(y, 2e6, 500e3, FS),
                          build_window(WindowSpec(center_us=20.0 + k * DT), DT))
    assert z1 * c[k] == pytest.approx(z0, rel=1e-9)


def test_missing_calibration():
    win = build_window(WindowSpec(center_us=20.0), DT)
    with pytest.raises(ValueError):
        extract_quadratures(np.zeros(2000, complex), win, None)
    cal = VacuumCalibration({"A1": 1.0}, 10)
    with pytest.raises(ValueError):
        cal.gain("R1")


def test_window_outside_trace():
    win = build_window(WindowSpec(center_us=1.0), DT)
    with pytest.raises(ValueError):
        integrate_window(np.zeros(2000, complex), win)


def test_gain_from_vacuum(rng):
    z = 0.8 * (rng.standard_normal(100_000) + 1j * rng.standard_normal(100_000))
    assert gain_from_vacuum(z) == pytest.approx(0.8, rel=0.01)


def test_calibration_round_trip(tmp_path):
    cal = VacuumCalibration({"A1": 0.98, "R1": 0.99}, 8000, {"A1": 2e6, "R1": 6e6}, {"h_us": 7.0})
    cal.save(tmp_path / "c.json")
    assert VacuumCalibration.load(tmp_path / "c.json") == cal
    with pytest.raises(ValueError):
        VacuumCalibration.load(tmp_path / "missing.json")


def test_dsp_config_sigma():
    assert DspConfig().filter_sigma_hz == 500e3
    assert DspConfig(width_convention="fwhm").filter_sigma_hz == pytest.approx(500e3 / FWHM_PER_SIGMA)
