"""Shot-by-shot phase and delay correction from the two reference pulses.

The trace phase is modelled as phase(f) = theta - 2*pi*f*delta: a global
phase plus a trigger delay.  Each reference pulse gives the phase at its own
frequency; the pair fixes theta and delta.  Correcting advances the trace by
delta (FFT shift) and removes theta.

Windowed integrals of the demodulated, Gaussian-filtered trace are linear
functionals of the raw samples.  Because the filter is real and even, the
integral of ``w * F(x * conj(c))`` equals that of ``F(w) * conj(c) * x``, so
each one is evaluated as a dot product between the trace spectrum and a
precomputed kernel spectrum.  :meth:`PhaseCorrector.corrected_trace` gives the
explicit time-domain route for callers that need whole traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from ..core import ShotRecord
from ..dsp import carrier
from ..layout import TraceLayout

DEFAULT_MIN_SNR = 5.0


@dataclass(frozen=True)
class PhaseEstimate:
    theta_rad: float
    delta_s: float
    residual_deg: float
    snr: tuple[float, float]
    ok: bool


def cmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Complex product from real operations.

    numpy's complex multiply rounds differently depending on whether the
    loop runs in place (temporary elision kicks in for large arrays), which
    would make a shot's result depend on the batch size.
    """
    ar, ai, br, bi = a.real, a.imag, b.real, b.imag
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=np.complex128)
    out.real = ar * br - ai * bi
    out.imag = ar * bi + ai * br
    return out


def row_dot(rows: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """(..., k) dot products of each row with each kernel.

    Row-wise real reductions rather than a matrix product, so a shot's result
    does not depend on how many other shots share the batch.
    """
    rr, ri = rows.real, rows.imag
    out = []
    for k in kernels:
        kr, ki = k.real, k.imag
        out.append((np.sum(rr * kr, axis=-1) - np.sum(ri * ki, axis=-1))
                   + 1j * (np.sum(rr * ki, axis=-1) + np.sum(ri * kr, axis=-1)))
    return np.stack(out, axis=-1)


def kernel_spectrum(layout: TraceLayout, weights: np.ndarray, f_hz: float) -> np.ndarray:
    """Spectrum G with sum_t F(w)(t) conj(c_f(t)) x(t) dt == (G @ fft(x)) / n * dt."""
    n = layout.n_samples
    fw = sfft.ifft(sfft.fft(weights) * layout.filter_response).real
    k = fw * np.conj(carrier(n, f_hz, layout.params.sample_rate_hz))
    # sum_t k x = (1/n) sum_j conj(fft(conj k))_j X_j
    return np.conj(sfft.fft(np.conj(k)))


class PhaseCorrector:
    """Reference-pulse phase estimation and correction for one layout."""

    def __init__(self, layout: TraceLayout, quantize: bool = False, min_snr: float = DEFAULT_MIN_SNR):
        self.layout = layout
        self.quantize = quantize
        self.min_snr = min_snr
        p, t = layout.params, layout.timing
        n, dt = layout.n_samples, layout.dt_us
        self.nu = sfft.fftfreq(n, d=1.0 / p.sample_rate_hz)
        self.freqs = (t.ref1.freq_hz, t.ref2.freq_hz)
        kernels, noise = [], []
        for sl, f in zip(layout.ref_slices, self.freqs):
            box = np.zeros(n)
            box[sl] = 1.0
            kernels.append(kernel_spectrum(layout, box, f))
            fbox = sfft.ifft(sfft.fft(box) * layout.filter_response).real
            # per-quadrature std of the integral for unit-variance vacuum
            noise.append(math.sqrt(np.sum(fbox**2) * dt))
        self.ref_kernels = np.array(kernels)
        self.ref_noise = np.array(noise)

    def reference_integrals(self, spectra: np.ndarray) -> np.ndarray:
        """(..., 2) complex integrals of the two demodulated reference pulses."""
        return row_dot(spectra, self.ref_kernels) * (self.layout.dt_us / self.layout.n_samples)

    def estimate(self, spectra: np.ndarray):
        """theta, delta, snr (…, 2), residual_deg and ok flags from trace spectra."""
        refs = self.reference_integrals(np.atleast_2d(spectra))
        phi = np.angle(refs)
        f1, f2 = self.freqs
        dphi = np.angle(np.exp(1j * (phi[:, 1] - phi[:, 0])))
        delta = -dphi / (2 * np.pi * (f2 - f1))
        if self.quantize:
            step = self.layout.params.jitter_step_s
            delta = step * np.clip(np.round(delta / step), 0, 2)
        theta = np.mod(phi[:, 0] + 2 * np.pi * f1 * delta, 2 * np.pi)
        snr = np.abs(refs) / self.ref_noise
        with np.errstate(divide="ignore"):
            # relative ASE/RASE phase error from the two reference estimates
            residual = np.degrees(np.sqrt(1.0 / snr[:, 0] ** 2 + 1.0 / snr[:, 1] ** 2))
        ok = np.all(snr >= self.min_snr, axis=1)
        return theta, delta, snr, residual, ok

    def ramp(self, theta, delta) -> np.ndarray:
        """Spectral factor that advances by ``delta`` and removes ``theta``."""
        theta = np.asarray(theta, dtype=float)[..., None]
        delta = np.asarray(delta, dtype=float)[..., None]
        return np.exp(1j * (2 * np.pi * self.nu * delta - theta))

    def corrected_trace(self, samples, theta, delta, workers=None) -> np.ndarray:
        spec = sfft.fft(np.asarray(samples, dtype=np.complex128), axis=-1, workers=workers)
        return sfft.ifft(cmul(spec, self.ramp(theta, delta)), axis=-1, workers=workers)


def phase_correct(shot: ShotRecord, layout: TraceLayout, quantize: bool = False,
                  min_snr: float = DEFAULT_MIN_SNR) -> tuple[ShotRecord, PhaseEstimate]:
    """Estimate and undo one shot's global phase and trigger delay."""
    if shot.sample_rate_hz != layout.params.sample_rate_hz or shot.n_samples != layout.n_samples:
        raise ValueError("shot does not match the layout's sample grid")
    pc = PhaseCorrector(layout, quantize, min_snr)
    x = np.asarray(shot.samples, dtype=np.complex128)
    theta, delta, snr, residual, ok = pc.estimate(sfft.fft(x))
    y = pc.corrected_trace(x, theta[0], delta[0])
    est = PhaseEstimate(float(theta[0]), float(delta[0]), float(residual[0]),
                        (float(snr[0, 0]), float(snr[0, 1])), bool(ok[0]))
    return ShotRecord(y, shot.sample_rate_hz, shot.shot_id, shot.rng_seed, shot.truth), est
