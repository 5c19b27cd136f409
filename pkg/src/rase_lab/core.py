"""Domain types shared by the simulator, the DSP chain and the analysis.

Units: times are in microseconds (``*_us``), frequencies in Hz (``*_hz``),
except where a field name says otherwise (``delta_s`` is seconds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

US = 1e-6  # seconds per microsecond

#: Pair labels for the inseparability analysis, ASE window first.
PAIR_LABELS_1 = ("A1R1",)
PAIR_LABELS_2 = ("A1R1", "A1R2", "A2R1", "A2R2")

# Reference constants quoted for the Pr:YSO sample.  Documentation only; no
# implemented equation consumes them.
T1_EXCITED_US = 164.0
T2_STAR_US = 151.0
HYPERFINE_LIFETIME_S = 200.0
HYPERFINE_COHERENCE_US = 500.0


def us_to_s(t_us):
    return t_us * US


def s_to_us(t_s):
    return t_s / US


def samples_for(duration_us: float, sample_rate_hz: float) -> int:
    """Number of samples covering ``duration_us`` (rounded up)."""
    # round() first so that e.g. 53.0 us * 50 MS/s does not become 2651
    n = duration_us * US * sample_rate_hz
    return int(math.ceil(round(n, 6)))


def _default_eta0() -> float:
    # chosen so that s = 0, B = 5 us gives the measured 3.2 % efficiency
    return 0.032 * math.exp(4.0 * 5.0 / 53.0)


@dataclass(frozen=True)
class PhysicsParams:
    alpha_l: float = 2.35
    ase_bandwidth_hz: float = 65e3
    gain_bandwidth_hz: float = 160e3
    eta0: float = field(default_factory=_default_eta0)
    inv_L: float = 0.25
    t_spin_us: float = 7.0
    t_4l_us: float = 53.0
    f_ase_if_hz: float = 2e6
    f_rase_if_hz: float = 6e6
    sample_rate_hz: float = 50e6
    spin_decay: str = "gaussian"
    # net phase picked up by the echo through the two rephasing pulses
    echo_phase_rad: float = math.pi
    jitter_step_s: float = 3e-9

    def __post_init__(self):
        if not 0.0 < self.inv_L <= 1.0:
            raise ValueError(f"inv_L must be in (0, 1], got {self.inv_L}")
        if not 0.0 <= self.eta0 <= 1.0:
            raise ValueError(f"eta0 must be in [0, 1], got {self.eta0}")
        if self.alpha_l < 0:
            raise ValueError("alpha_l must be >= 0")
        if self.f_ase_if_hz == self.f_rase_if_hz:
            raise ValueError("ASE and RASE intermediate frequencies must differ")
        nyq = self.sample_rate_hz / 2
        if not (abs(self.f_ase_if_hz) < nyq and abs(self.f_rase_if_hz) < nyq):
            raise ValueError("intermediate frequencies must lie below Nyquist")
        if self.ase_bandwidth_hz > self.gain_bandwidth_hz:
            raise ValueError("ASE bandwidth cannot exceed the gain bandwidth")
        if self.spin_decay not in ("gaussian", "exponential"):
            raise ValueError(f"unknown spin_decay {self.spin_decay!r}")
        if self.t_spin_us <= 0 or self.t_4l_us <= 0:
            raise ValueError("decay times must be positive")

    @property
    def dt_us(self) -> float:
        return 1.0 / (self.sample_rate_hz * US)


@dataclass(frozen=True)
class RefPulse:
    """Weak coherent phase-reference pulse.

    ``delay_us`` is measured from the end of the RASE signal region.
    ``amplitude`` is in vacuum units per sqrt(us): a pulse of duration D
    integrates to a coherent amplitude of ``amplitude * sqrt(D)``.
    """

    delay_us: float
    duration_us: float
    freq_hz: float
    amplitude: float


@dataclass(frozen=True)
class ProtocolTiming:
    t_ase_us: float = 18.5
    a_us: float = 10.0
    b_us: float = 5.0
    s_us: float = 0.0
    pi1_us: float = 1.5
    pi2_us: float = 2.2
    ref1: RefPulse = RefPulse(3.0, 4.0, 2e6, 12.5)
    ref2: RefPulse = RefPulse(9.0, 4.0, 6e6, 12.5)
    n_modes: int = 1
    tail_us: float = 4.0
    # per-side extra distance from the pulses for each mode step; None means
    # the geometric window length
    mode_offset_us: float | None = None

    def __post_init__(self):
        if self.n_modes not in (1, 2):
            raise ValueError("n_modes must be 1 or 2")
        if min(self.t_ase_us, self.a_us, self.pi1_us, self.pi2_us) <= 0:
            raise ValueError("durations must be positive")
        if self.b_us < 0 or self.s_us < 0:
            raise ValueError("B and s must be non-negative")
        if self.ase_start_us < 0:
            raise ValueError("ASE window starts before the end of the inversion pulse")
        for ref in (self.ref1, self.ref2):
            if ref.delay_us <= 0 or ref.duration_us <= 0:
                raise ValueError("reference pulses must lie strictly after the RASE window")
        r1, r2 = self.ref_interval(1), self.ref_interval(2)
        if r1[1] > r2[0] and r2[1] > r1[0]:
            raise ValueError("reference pulses overlap")

    # -- derived schedule ---------------------------------------------------
    @property
    def window_us(self) -> float:
        return self.a_us / self.n_modes

    @property
    def total_storage_us(self) -> float:
        return 2 * self.b_us + self.s_us

    @property
    def t0_us(self) -> float:
        """Centre of the two rephasing pulses (echo symmetry point)."""
        return self.t_ase_us + (self.pi1_us + self.s_us + self.pi2_us) / 2

    @property
    def ase_start_us(self) -> float:
        return self.t_ase_us - self.b_us - self.a_us

    @property
    def rase_start_us(self) -> float:
        return self.t_ase_us + self.pi1_us + self.s_us + self.pi2_us + self.b_us

    @property
    def rase_end_us(self) -> float:
        return self.rase_start_us + self.a_us

    def pi_intervals(self) -> list[tuple[float, float]]:
        p1 = (self.t_ase_us, self.t_ase_us + self.pi1_us)
        s2 = p1[1] + self.s_us
        return [p1, (s2, s2 + self.pi2_us)]

    def ref_interval(self, which: int) -> tuple[float, float]:
        ref = self.ref1 if which == 1 else self.ref2
        start = self.rase_end_us + ref.delay_us
        return start, start + ref.duration_us

    @property
    def duration_us(self) -> float:
        return max(self.ref_interval(1)[1], self.ref_interval(2)[1]) + self.tail_us

    def ase_window_centers(self) -> list[float]:
        """Centres of A1..An; A1 is the earliest (furthest from the pulses)."""
        w = self.window_us
        return [self.ase_start_us + (k + 0.5) * w for k in range(self.n_modes)]

    def rase_window_centers(self) -> list[float]:
        """Centres of R1..Rn, the mirror images of A1..An about t0."""
        return [2 * self.t0_us - c for c in self.ase_window_centers()]

    def mode_offsets(self) -> list[float]:
        """Per-side offset of each mode from the B edge (0 for the nearest)."""
        step = self.window_us if self.mode_offset_us is None else self.mode_offset_us
        return [(self.n_modes - 1 - k) * step for k in range(self.n_modes)]

    def window_centers(self) -> dict[str, float]:
        out = {}
        for k, (ca, cr) in enumerate(zip(self.ase_window_centers(), self.rase_window_centers())):
            out[f"A{k + 1}"] = ca
            out[f"R{k + 1}"] = cr
        return out

    def pair_labels(self) -> tuple[str, ...]:
        return PAIR_LABELS_1 if self.n_modes == 1 else PAIR_LABELS_2

    def with_storage(self, s_us: float) -> "ProtocolTiming":
        return replace(self, s_us=s_us)


def multimode_timing(**kw) -> ProtocolTiming:
    """The two-window layout: A = 20 us, B = 5 us, T = 28.5 us, s = 0."""
    base = dict(t_ase_us=28.5, a_us=20.0, b_us=5.0, s_us=0.0, n_modes=2)
    base.update(kw)
    return ProtocolTiming(**base)


@dataclass(frozen=True)
class Truth:
    """Debug block: the nuisance parameters actually applied to a shot."""

    theta_rad: float
    delta_s: float


@dataclass(eq=False)
class ShotRecord:
    samples: np.ndarray
    sample_rate_hz: float
    shot_id: int
    rng_seed: int
    truth: Truth | None = None
    # pre-loss mode amplitudes etc.; in-memory only, never written to disk
    debug: dict | None = field(default=None, repr=False)

    def __eq__(self, other):
        if not isinstance(other, ShotRecord):
            return NotImplemented
        return (
            self.sample_rate_hz == other.sample_rate_hz
            and self.shot_id == other.shot_id
            and self.rng_seed == other.rng_seed
            and self.truth == other.truth
            and self.samples.dtype == other.samples.dtype
            and np.array_equal(self.samples, other.samples)
        )

    @property
    def n_samples(self) -> int:
        return len(self.samples)


@dataclass
class QuadSet:
    """Vacuum-normalized quadratures of an ASE/RASE window pair.

    Fields may be scalars (one shot) or equal-length arrays (an ensemble).
    """

    x1: np.ndarray
    p1: np.ndarray
    x2: np.ndarray
    p2: np.ndarray
    window_pair: str = "A1R1"

    def __post_init__(self):
        for name in ("x1", "p1", "x2", "p2"):
            v = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"non-finite quadrature in {name}")
            setattr(self, name, v)

    @classmethod
    def from_complex(cls, z1, z2, window_pair="A1R1") -> "QuadSet":
        z1, z2 = np.asarray(z1), np.asarray(z2)
        return cls(z1.real, z1.imag, z2.real, z2.imag, window_pair)

    def __len__(self):
        return int(np.size(self.x1))

    def subset(self, idx) -> "QuadSet":
        return QuadSet(self.x1[idx], self.p1[idx], self.x2[idx], self.p2[idx], self.window_pair)


@dataclass
class InsepCurve:
    b_grid: np.ndarray
    value: np.ndarray
    sigma: np.ndarray
    b_min: float
    i_min: float
    sigma_min: float
    confidence: float
    window_pair: str = "A1R1"
    n_shots: int = 0

    @property
    def endpoints(self) -> tuple[float, float]:
        """Criterion value at b = 0 and b = 1 (present in every grid we build)."""
        return float(self.value[0]), float(self.value[-1])
