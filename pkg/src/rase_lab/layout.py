"""Sample-grid view of a protocol: where every window, pulse and blank lands
in the digitized trace.  Shared by the simulator and the analysis so the two
agree on indices."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import fft as sfft

from .core import PhysicsParams, ProtocolTiming, samples_for
from .dsp import DspConfig, SampledWindow, build_window, gaussian_response


@dataclass(frozen=True)
class TraceLayout:
    params: PhysicsParams
    timing: ProtocolTiming
    dsp: DspConfig

    def __post_init__(self):
        t, dt = self.timing, self.params.dt_us
        half = self.dsp.window.cutoff_us
        if half > t.window_us / 2 + 1e-9:
            raise ValueError("analysis window wider than the signal window")
        for f in (t.ref1.freq_hz, t.ref2.freq_hz):
            if f >= self.params.sample_rate_hz / 2:
                raise ValueError("reference frequency above Nyquist")
        if t.ref1.freq_hz == t.ref2.freq_hz:
            raise ValueError("reference pulses need distinct frequencies")
        # windows must not reach into a pi-pulse interval
        for label, c in t.window_centers().items():
            lo, hi = c - half, c + half
            for p0, p1 in t.pi_intervals():
                if hi > p0 and lo < p1:
                    raise ValueError(f"window {label} overlaps a pi-pulse")
            for k in (1, 2):
                r0, r1 = t.ref_interval(k)
                if hi > r0 and lo < r1:
                    raise ValueError(f"reference pulse {k} collides with window {label}")
        if dt <= 0:
            raise ValueError("bad sample rate")

    @property
    def dt_us(self) -> float:
        return self.params.dt_us

    @cached_property
    def n_samples(self) -> int:
        # tail stretched to an FFT-friendly length
        return sfft.next_fast_len(samples_for(self.timing.duration_us, self.params.sample_rate_hz))

    @property
    def duration_us(self) -> float:
        """Recorded duration including the stretched tail."""
        return self.n_samples * self.dt_us

    @cached_property
    def t_us(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt_us

    def index(self, t_us: float) -> int:
        return int(round(t_us / self.dt_us))

    @cached_property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.timing.window_centers())

    def freq(self, label: str) -> float:
        return self.params.f_ase_if_hz if label.startswith("A") else self.params.f_rase_if_hz

    @cached_property
    def windows(self) -> dict[str, SampledWindow]:
        out = {}
        for label, c in self.timing.window_centers().items():
            w = build_window(self.dsp.window.at(c), self.dt_us, self.dsp.width_convention)
            if w.start < 0 or w.stop > self.n_samples:
                raise ValueError(f"window {label} extends outside trace")
            out[label] = w
        return out

    @cached_property
    def filter_response(self) -> np.ndarray:
        return gaussian_response(self.n_samples, self.params.sample_rate_hz, self.dsp.filter_sigma_hz)

    def slice_of(self, t0_us: float, t1_us: float) -> slice:
        return slice(self.index(t0_us), self.index(t1_us))

    @cached_property
    def blank_slices(self) -> list[slice]:
        return [self.slice_of(a, b) for a, b in self.timing.pi_intervals()]

    @cached_property
    def ref_slices(self) -> tuple[slice, slice]:
        return self.slice_of(*self.timing.ref_interval(1)), self.slice_of(*self.timing.ref_interval(2))

    @cached_property
    def ase_region(self) -> slice:
        t = self.timing
        return self.slice_of(t.ase_start_us, t.ase_start_us + t.a_us)

    @cached_property
    def rase_region(self) -> slice:
        t = self.timing
        return self.slice_of(t.rase_start_us, t.rase_end_us)

    @cached_property
    def two_t0_index(self) -> int:
        return self.index(2 * self.timing.t0_us)


@lru_cache(maxsize=32)
def get_layout(params: PhysicsParams, timing: ProtocolTiming, dsp: DspConfig) -> TraceLayout:
    return TraceLayout(params, timing, dsp)
