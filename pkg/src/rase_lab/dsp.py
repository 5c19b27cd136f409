"""Heterodyne signal chain: demodulation, Gaussian filtering, windowing and
quadrature extraction.

Gaussian widths given in Hz (window ``w_hz``, filter ``filter_bw_hz``) are
converted to a standard deviation in frequency through ``width_convention``:
``"sigma"`` takes them as the standard deviation, ``"fwhm"`` as full width at
half maximum.  Everything downstream only ever sees the standard deviation.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft as sfft
from scipy.special import erf

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
WIDTH_CONVENTIONS = {"sigma": 1.0, "fwhm": 1.0 / FWHM_PER_SIGMA}


def gaussian_sigma_hz(width_hz: float, convention: str = "sigma") -> float:
    try:
        return width_hz * WIDTH_CONVENTIONS[convention]
    except KeyError:
        raise ValueError(f"unknown width convention {convention!r}") from None


@dataclass(frozen=True)
class WindowSpec:
    h_us: float = 7.0
    w_hz: float = 600e3
    cutoff_us: float = 5.0  # half-length of the hard truncation
    center_us: float = 0.0

    def __post_init__(self):
        if self.h_us <= 0 or self.w_hz <= 0:
            raise ValueError("window top-hat length and Gaussian width must be positive")
        if self.cutoff_us < self.h_us / 2:
            raise ValueError("cutoff shorter than half the top-hat length")

    def at(self, center_us: float) -> "WindowSpec":
        return WindowSpec(self.h_us, self.w_hz, self.cutoff_us, center_us)


@dataclass(frozen=True)
class DspConfig:
    window: WindowSpec = WindowSpec()
    filter_bw_hz: float = 500e3
    width_convention: str = "sigma"

    @property
    def filter_sigma_hz(self) -> float:
        return gaussian_sigma_hz(self.filter_bw_hz, self.width_convention)


@dataclass(frozen=True)
class SampledWindow:
    """A window sampled on the trace grid, stored as a slice."""

    start: int
    values: np.ndarray
    dt_us: float

    @property
    def stop(self) -> int:
        return self.start + len(self.values)

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        if self.start < 0 or self.stop > n:
            raise ValueError("window extends outside trace")
        out[self.start:self.stop] = self.values
        return out


def window_profile(t_us, spec: WindowSpec, convention: str = "sigma") -> np.ndarray:
    """Un-normalized top-hat (*) Gaussian evaluated at ``t_us``."""
    x = np.asarray(t_us, dtype=float) - spec.center_us
    half = spec.h_us / 2
    if math.isinf(spec.w_hz):
        # half weight on samples exactly at the edges, the w -> inf limit of the erf form
        ax = np.abs(x)
        prof = np.where(np.isclose(ax, half, rtol=0, atol=1e-9), 0.5, (ax < half).astype(float))
    else:
        sigma_t = 1e6 / (2 * math.pi * gaussian_sigma_hz(spec.w_hz, convention))
        k = 1.0 / (math.sqrt(2.0) * sigma_t)
        prof = 0.5 * (erf((x + half) * k) - erf((x - half) * k))
    prof[np.abs(x) > spec.cutoff_us + 1e-9] = 0.0
    return prof


def build_window(spec: WindowSpec, dt_us: float, convention: str = "sigma") -> SampledWindow:
    """Unit-energy window on the sample grid ``t_n = n * dt_us``.

    The centre is snapped to the nearest sample so the samples are exactly
    symmetric about it; ``sum(w**2) * dt_us == 1``.
    """
    ic = int(round(spec.center_us / dt_us))
    half = int(math.floor(spec.cutoff_us / dt_us + 1e-9))
    idx = np.arange(-half, half + 1)
    vals = window_profile(idx * dt_us, spec.at(0.0), convention)
    vals /= math.sqrt(np.sum(vals**2) * dt_us)
    return SampledWindow(ic - half, vals, dt_us)


def gaussian_response(n: int, sample_rate_hz: float, sigma_hz: float) -> np.ndarray:
    nu = sfft.fftfreq(n, d=1.0 / sample_rate_hz)
    return np.exp(-0.5 * (nu / sigma_hz) ** 2)


def noise_bandwidth_ratio(n: int, sample_rate_hz: float, sigma_hz: float) -> float:
    """Output/input variance ratio of the filter for white input."""
    return float(np.mean(gaussian_response(n, sample_rate_hz, sigma_hz) ** 2))


def carrier(n: int, f_hz: float, sample_rate_hz: float) -> np.ndarray:
    """exp(2 pi i f t_n) with t measured from the first sample."""
    # reduce the phase modulo one cycle in exact integer arithmetic when possible
    ratio = f_hz / sample_rate_hz
    return np.exp(2j * np.pi * ((np.arange(n) * ratio) % 1.0))


def demodulate_filter(trace, f_if_hz, filter_bw_hz, sample_rate_hz,
                      convention="sigma", workers=None):
    """Beat ``trace`` (last axis = time) down from ``f_if_hz`` and low-pass it
    with a zero-phase Gaussian of width ``filter_bw_hz``."""
    trace = np.asarray(trace)
    n = trace.shape[-1]
    if f_if_hz >= sample_rate_hz / 2:
        raise ValueError("intermediate frequency above Nyquist")
    bb = trace * np.conj(carrier(n, f_if_hz, sample_rate_hz))
    h = gaussian_response(n, sample_rate_hz, gaussian_sigma_hz(filter_bw_hz, convention))
    return sfft.ifft(sfft.fft(bb, axis=-1, workers=workers) * h, axis=-1, workers=workers)


def integrate_window(baseband, window: SampledWindow) -> np.ndarray:
    """Raw windowed integral sum(w * baseband) * dt (no normalization)."""
    baseband = np.asarray(baseband)
    n = baseband.shape[-1]
    if window.start < 0 or window.stop > n:
        raise ValueError("window extends outside trace")
    seg = baseband[..., window.start:window.stop]
    return seg @ window.values * window.dt_us


def extract_quadratures(baseband, window: SampledWindow, gain):
    """Return ``(x, p)`` from the windowed integral scaled by the vacuum gain."""
    if gain is None or not np.isfinite(gain) or gain <= 0:
        raise ValueError("missing or invalid vacuum calibration")
    z = integrate_window(baseband, window) / gain
    return z.real, z.imag


def gain_from_vacuum(z_vac) -> float:
    """Scale that gives the vacuum ensemble unit variance per quadrature."""
    z_vac = np.asarray(z_vac)
    pooled = 0.5 * (np.var(z_vac.real, ddof=1) + np.var(z_vac.imag, ddof=1))
    return math.sqrt(pooled)


@dataclass
class VacuumCalibration:
    """Per-window vacuum gains (window label -> gain)."""

    gains: dict[str, float]
    n_shots: int
    freqs_hz: dict[str, float] = field(default_factory=dict)
    dsp: dict = field(default_factory=dict)

    def gain(self, label: str) -> float:
        try:
            return self.gains[label]
        except KeyError:
            raise ValueError(f"no vacuum calibration for window {label}") from None

    def save(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "VacuumCalibration":
        try:
            d = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ValueError(f"calibration file {path} not found") from None
        return cls(d["gains"], d["n_shots"], d.get("freqs_hz", {}), d.get("dsp", {}))
