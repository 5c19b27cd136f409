"""Gain-profile fit of the inverted feature and the expected ASE variance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

_FOUR_LN2 = 4.0 * math.log(2.0)


@dataclass(frozen=True)
class GainFit:
    alpha_l: float
    bandwidth_hz: float  # FWHM of the optical-depth profile
    center_hz: float
    alpha_l_err: float
    bandwidth_err: float


def gain_profile(f_hz, alpha_l, bandwidth_hz, center_hz=0.0):
    """Optical depth vs probe offset: a Gaussian of FWHM ``bandwidth_hz``."""
    f = np.asarray(f_hz, dtype=float)
    return alpha_l * np.exp(-_FOUR_LN2 * ((f - center_hz) / bandwidth_hz) ** 2)


def fit_gain_profile(probe_ratios) -> GainFit:
    """Fit ``ln(transmission ratio)`` against probe offset.

    ``probe_ratios`` is a sequence of ``(offset_hz, ratio)`` where ratio is the
    probe transmission with the inversion over that without it.
    """
    data = np.asarray(probe_ratios, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or len(data) < 5:
        raise ValueError("need at least five (offset, ratio) points")
    f, ratio = data[:, 0], data[:, 1]
    if np.any(ratio <= 0):
        raise ValueError("transmission ratios must be positive")
    depth = np.log(ratio)

    a0 = float(depth.max())
    c0 = float(f[np.argmax(depth)])
    w = np.clip(depth, 0, None)
    spread = math.sqrt(max(np.sum(w * (f - c0) ** 2) / max(np.sum(w), 1e-12), 1.0))
    p0 = [a0, 2.3548 * spread, c0]
    popt, pcov = curve_fit(gain_profile, f, depth, p0=p0, maxfev=10000)
    err = np.sqrt(np.diag(pcov))
    return GainFit(float(popt[0]), float(abs(popt[1])), float(popt[2]), float(err[0]), float(err[1]))


def predicted_ase_variance(alpha_l: float, inv_L: float = 1.0) -> float:
    """Heterodyne ASE quadrature variance (vacuum = 1) for optical depth alpha_l.

    (e^{alpha_l} + 1) / 2 before detection loss; ``inv_L`` < 1 applies the
    common detection beamsplitter.
    """
    if alpha_l < 0:
        raise ValueError("alpha_l must be >= 0")
    v = (math.exp(alpha_l) + 1.0) / 2.0
    return inv_L * v + 1.0 - inv_L
