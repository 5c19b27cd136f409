"""Synthetic 4L-RASE shots.

Each ASE window carries one temporal mode that is entangled with the mirror
image RASE window.  The mode function is the one the analysis chain projects
onto (window convolved with the demodulation filter, at the window's IF), so
the extracted quadratures follow the lossy two-mode-squeezed statistics
exactly.  Everything else in the trace is white vacuum, ASE-only band noise
at 65 kHz-scale bandwidth (orthogonal to the entangled modes), two coherent
reference pulses and zeroed pi-pulse intervals.  A global phase and a
quantized trigger delay are applied last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .core import PhysicsParams, ProtocolTiming, ShotRecord, Truth, QuadSet
from .dsp import DspConfig, FWHM_PER_SIGMA, carrier
from .layout import TraceLayout, get_layout


def kappa(v_preloss: float) -> float:
    return math.sqrt(v_preloss**2 - 1.0) / v_preloss


def _cnormal(rng, size, var=1.0):
    """Complex Gaussian with variance ``var`` on each quadrature."""
    shape = (size,) if np.isscalar(size) else tuple(size)
    z = rng.standard_normal((2,) + shape)
    return math.sqrt(var) * (z[0] + 1j * z[1])


VACUUM_STREAM = 1


def shot_rng_seed(master_seed: int, shot_id: int, stream: int = 0) -> int:
    """Per-shot 64-bit seed derived from the master seed and the shot id.

    ``stream`` separates independent families (signal, vacuum) under one
    master seed.
    """
    key = (shot_id,) if stream == 0 else (stream, shot_id)
    ss = np.random.SeedSequence(master_seed, spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class EntangledModePair:
    """Pre-loss ASE (``a``) and RASE (``r``) mode amplitudes; scalars or arrays."""

    a: np.ndarray
    r: np.ndarray
    v_preloss: float


def sample_entangled_modes(v_preloss, n, seed=None, echo_phase_rad=math.pi, noiseless=False):
    """Draw ``n`` two-mode-squeezed pairs with quadrature variance ``v_preloss``.

    r = exp(i*echo_phase) * kappa * conj(a) + noise, kappa = sqrt(V^2-1)/V and
    noise variance 1/V, so both marginals have variance V and
    |cov(x_a, x_r)| = sqrt(V^2 - 1).
    """
    if v_preloss < 1.0:
        raise ValueError(f"pre-loss variance {v_preloss} is below the vacuum level")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    a = _cnormal(rng, n, v_preloss)
    noise = _cnormal(rng, n, 1.0 / v_preloss)
    if noiseless:
        noise = np.zeros_like(noise)
    r = np.exp(1j * echo_phase_rad) * kappa(v_preloss) * np.conj(a) + noise
    return EntangledModePair(a, r, v_preloss)


def _check_transmission(name, value, allow_zero):
    lo_ok = value >= 0 if allow_zero else value > 0
    if not (lo_ok and value <= 1):
        raise ValueError(f"{name} must be in {'[0' if allow_zero else '(0'}, 1], got {value}")


def loss_chain(a, r, inv_L, eta, rng=None, noiseless=False):
    """Complex-amplitude version of :func:`apply_loss_chain`."""
    _check_transmission("inv_L", inv_L, False)
    _check_transmission("eta", eta, True)
    a, r = np.asarray(a), np.asarray(r)
    if noiseless:
        v1 = v2 = v3 = 0.0
    else:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        v1, v2, v3 = (_cnormal(rng, a.shape) for _ in range(3))
    a_m = math.sqrt(inv_L) * a + math.sqrt(1 - inv_L) * v1
    r_e = math.sqrt(eta) * r + math.sqrt(1 - eta) * v2
    r_m = math.sqrt(inv_L) * r_e + math.sqrt(1 - inv_L) * v3
    return a_m, r_m


def apply_loss_chain(pair: EntangledModePair, inv_L, eta, rng=None, window_pair="A1R1") -> QuadSet:
    """Common detection loss on both modes, rephasing efficiency on the echo only."""
    a_m, r_m = loss_chain(pair.a, pair.r, inv_L, eta, rng)
    return QuadSet.from_complex(a_m, r_m, window_pair)


def storage_efficiency(s_us, b_us, mode_offset_us, params: PhysicsParams):
    """Rephasing efficiency after spin storage ``s_us``.

    eta0 * spin_decay(s) * exp(-2 * t_opt / t_4l) with optical dwell time
    t_opt = 2 * (b_us + mode_offset_us).
    """
    s = np.asarray(s_us, dtype=float)
    if np.any(s < 0):
        raise ValueError("storage time must be non-negative")
    if params.spin_decay == "gaussian":
        spin = np.exp(-((s / params.t_spin_us) ** 2))
    else:
        spin = np.exp(-s / params.t_spin_us)
    optical = np.exp(-2.0 * (2.0 * (np.asarray(b_us) + np.asarray(mode_offset_us))) / params.t_4l_us)
    out = params.eta0 * spin * optical
    return float(out) if np.ndim(out) == 0 else out


class ShotPlan:
    """Precomputed, read-only pieces of the trace for one configuration."""

    def __init__(self, layout: TraceLayout):
        self.layout = layout
        p, t = layout.params, layout.timing
        n, dt = layout.n_samples, layout.dt_us
        self.n = n
        self.nu = sfft.fftfreq(n, d=1.0 / p.sample_rate_hz)

        # entangled mode functions, in label order A1, R1, A2, R2 ...
        self.labels = layout.labels
        modes = []
        for label in self.labels:
            w = layout.windows[label].dense(n)
            fw = sfft.ifft(sfft.fft(w) * layout.filter_response).real
            fw /= math.sqrt(np.sum(fw**2) * dt)
            modes.append(fw * carrier(n, layout.freq(label), p.sample_rate_hz))
        self.modes = np.array(modes)
        gram = np.conj(self.modes) @ self.modes.T * dt
        self.gram_inv = np.linalg.inv(gram)

        # ASE-only band noise: Gaussian power spectrum of FWHM ase_bandwidth
        sig = p.ase_bandwidth_hz / FWHM_PER_SIGMA
        self.ase_shape = np.exp(-((self.nu - p.f_ase_if_hz) ** 2) / (4 * sig**2))
        ase_mode_spec = sfft.fft(self.modes[0]) * self.ase_shape
        shaped = sfft.ifft(ase_mode_spec)
        # variance per quadrature the shaped noise would put into the A1 mode
        self.ase_mode_var = float(np.sum(np.abs(shaped) ** 2) * dt)
        self.ase_mask = np.zeros(n)
        self.ase_mask[layout.slice_of(0.0, t.t_ase_us)] = 1.0

        ref = np.zeros(n, complex)
        for k, rp in ((0, t.ref1), (1, t.ref2)):
            sl = layout.ref_slices[k]
            ref[sl] = rp.amplitude * carrier(n, rp.freq_hz, p.sample_rate_hz)[sl]
        self.ref_wave = ref

        offsets = t.mode_offsets()
        self.etas = [storage_efficiency(t.s_us, t.b_us, off, p) for off in offsets]

    def project(self, x):
        return (np.conj(self.modes) @ x) * self.layout.dt_us


@lru_cache(maxsize=16)
def get_plan(params: PhysicsParams, timing: ProtocolTiming, dsp: DspConfig) -> ShotPlan:
    return ShotPlan(get_layout(params, timing, dsp))


def _finish(plan: ShotPlan, x, theta, delta_s, dtype):
    x = sfft.ifft(sfft.fft(x) * np.exp(-2j * np.pi * plan.nu * delta_s)) * np.exp(1j * theta)
    for sl in plan.layout.blank_slices:
        x[sl] = 0.0
    return x.astype(dtype)


def _draw_nuisance(rng, params, theta, delta_s):
    th = rng.uniform(0.0, 2 * math.pi)
    dl = params.jitter_step_s * int(rng.integers(0, 3))
    return (th if theta is None else theta), (dl if delta_s is None else delta_s)


def synthesize_shot(params: PhysicsParams, timing: ProtocolTiming, v_preloss: float, seed: int,
                    dsp: DspConfig = DspConfig(), shot_id: int = 0, *, noiseless=False,
                    theta=None, delta_s=None, dtype=np.complex64) -> ShotRecord:
    """One signal shot.  ``seed`` is the per-shot seed (see :func:`shot_rng_seed`).

    ``noiseless`` drops every vacuum contribution (trace floor, loss ports,
    squeezing noise) so the RASE amplitude is exactly the scaled conjugate of
    the ASE amplitude.  ``theta``/``delta_s`` force the phase nuisances.
    """
    plan = get_plan(params, timing, dsp)
    rng = np.random.default_rng(seed)
    n_modes = timing.n_modes
    pair = sample_entangled_modes(v_preloss, n_modes, rng, params.echo_phase_rad, noiseless)
    alpha = np.empty(n_modes, complex)
    rho = np.empty(n_modes, complex)
    for j in range(n_modes):
        alpha[j], rho[j] = loss_chain(pair.a[j], pair.r[j], params.inv_L, plan.etas[j], rng, noiseless)
    th, dl = _draw_nuisance(rng, params, theta, delta_s)

    n, dt = plan.n, plan.layout.dt_us
    if noiseless:
        x = np.zeros(n, complex)
    else:
        x = _cnormal(rng, n, 1.0 / dt)
        band = sfft.ifft(sfft.fft(_cnormal(rng, n, 1.0 / dt)) * plan.ase_shape)
        scale = math.sqrt(params.inv_L * (v_preloss - 1.0) / plan.ase_mode_var)
        x += scale * plan.ase_mask * band
    target = np.empty(len(plan.labels), complex)
    for j in range(n_modes):
        target[2 * j], target[2 * j + 1] = alpha[j], rho[j]
    x += plan.gram_inv @ (target - plan.project(x)) @ plan.modes
    x += plan.ref_wave

    samples = _finish(plan, x, th, dl, dtype)
    debug = dict(a=pair.a, r=pair.r, alpha=alpha, rho=rho, etas=list(plan.etas))
    return ShotRecord(samples, params.sample_rate_hz, shot_id, seed, Truth(th, dl), debug)


def synthesize_vacuum_shot(params: PhysicsParams, timing: ProtocolTiming, seed: int,
                           dsp: DspConfig = DspConfig(), shot_id: int = 0, *,
                           theta=None, delta_s=None, dtype=np.complex64) -> ShotRecord:
    """Same layout as a signal shot (pulses, blanking, nuisances) with no signal."""
    plan = get_plan(params, timing, dsp)
    rng = np.random.default_rng(seed)
    th, dl = _draw_nuisance(rng, params, theta, delta_s)
    x = _cnormal(rng, plan.n, 1.0 / plan.layout.dt_us) + plan.ref_wave
    samples = _finish(plan, x, th, dl, dtype)
    return ShotRecord(samples, params.sample_rate_hz, shot_id, seed, Truth(th, dl))
