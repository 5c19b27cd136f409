"""ASE/RASE cross-correlation C(tau) = sum_t A(t) R(tau - t) dt.

tau is reported relative to 2*t0, so a RASE field that is the conjugated
mirror image of the ASE about t0 peaks at tau = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from ..dsp import VacuumCalibration
from ..layout import TraceLayout

VARIANTS = ("same", "shuffled", "uncorrected")


def lag_axis_us(layout: TraceLayout) -> np.ndarray:
    """tau (us, relative to 2*t0) for each index of the full convolution."""
    a, r = layout.ase_region, layout.rase_region
    n = (a.stop - a.start) + (r.stop - r.start) - 1
    return (np.arange(n) + a.start + r.start - layout.two_t0_index) * layout.dt_us


def cross_correlation(ase, rase, dt_us: float) -> np.ndarray:
    """Full discrete correlation along the last axis (length La + Lr - 1)."""
    ase, rase = np.asarray(ase), np.asarray(rase)
    if ase.shape[:-1] != rase.shape[:-1]:
        raise ValueError("ASE and RASE segments hold different numbers of shots")
    if ase.shape[-1] == 0 or rase.shape[-1] == 0:
        raise ValueError("empty segment")
    return fftconvolve(ase, rase, axes=-1) * dt_us


@dataclass
class CorrelationResult:
    tau_us: np.ndarray
    mean: dict[str, np.ndarray]  # variant -> ensemble-mean complex C(tau)
    counts: dict[str, int]

    def peak(self, variant: str = "same") -> tuple[float, float]:
        """(tau, |C|) at the maximum of the ensemble mean."""
        mag = np.abs(self.mean[variant])
        i = int(np.argmax(mag))
        return float(self.tau_us[i]), float(mag[i])

    def baseline_std(self, variant: str = "shuffled") -> float:
        """RMS of the ensemble mean about its zero expectation."""
        return float(np.sqrt(np.mean(np.abs(self.mean[variant]) ** 2)))

    def fwhm_us(self, variant: str = "same") -> float:
        return fwhm(self.tau_us, np.abs(self.mean[variant]))


def fwhm(x, y) -> float:
    """Full width at half maximum of a single-peaked curve (linear interpolation)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    i = int(np.argmax(y))
    half = y[i] / 2
    lo = i
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = i
    while hi < len(y) - 1 and y[hi] > half:
        hi += 1
    if y[lo] > half or y[hi] > half:
        raise ValueError("peak does not fall to half maximum inside the range")
    xl = np.interp(half, [y[lo], y[lo + 1]], [x[lo], x[lo + 1]])
    xr = np.interp(half, [y[hi], y[hi - 1]], [x[hi], x[hi - 1]])
    return float(xr - xl)


class CorrelationAccumulator:
    """Streaming ensemble means of the same-shot, shuffled and uncorrected C(tau).

    Shuffled pairs are consecutive shots (ASE of shot i with RASE of shot
    i + 1), carried across batch boundaries.  Feed it :class:`Extraction`
    batches that carry segments.
    """

    def __init__(self, layout: TraceLayout, calibration: VacuumCalibration | None = None):
        self.layout = layout
        self.tau_us = lag_axis_us(layout)
        ga = calibration.gain("A1") if calibration else 1.0
        gr = calibration.gain("R1") if calibration else 1.0
        self.scale = 1.0 / (ga * gr)
        self.sums = {v: np.zeros(len(self.tau_us), complex) for v in VARIANTS}
        self.counts = {v: 0 for v in VARIANTS}
        self._carry = None

    def _add(self, variant, a, r):
        if len(a):
            c = cross_correlation(a, r, self.layout.dt_us)
            self.sums[variant] += c.sum(axis=0) * self.scale
            self.counts[variant] += len(a)

    def __call__(self, ex):
        seg = ex.segments
        if not seg:
            raise ValueError("extraction carries no segments")
        ok = ex.ok
        a, r = seg["ase"][ok], seg["rase"][ok]
        self._add("same", a, r)
        self._add("uncorrected", seg["raw_ase"][ok], seg["raw_rase"][ok])
        if self._carry is not None and len(r):
            a = np.concatenate([self._carry[None], a])
            r = np.concatenate([r[:1], r])
        if len(a) > 1:
            self._add("shuffled", a[:-1], r[1:])
        if len(a):
            self._carry = a[-1].copy()

    def result(self) -> CorrelationResult:
        mean = {v: self.sums[v] / max(self.counts[v], 1) for v in VARIANTS}
        return CorrelationResult(self.tau_us, mean, dict(self.counts))
