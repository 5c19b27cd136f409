"""Batched synthesis and extraction.

Shots are produced and analysed in fixed-size batches.  Every shot draws from
its own seed (master seed + shot id), so results do not depend on the batch
size or on how many threads share the work.  ``RASE_LAB_THREADS`` caps the
thread count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .analysis.phase import DEFAULT_MIN_SNR, PhaseCorrector, cmul, kernel_spectrum, row_dot
from .core import QuadSet, ShotRecord
from .dsp import VacuumCalibration, demodulate_filter, gain_from_vacuum
from .layout import TraceLayout
from .simulator import VACUUM_STREAM, shot_rng_seed, synthesize_shot, synthesize_vacuum_shot

log = logging.getLogger(__name__)

BATCH_SIZE = 250


def worker_count(requested: int | None = None) -> int:
    env = os.environ.get("RASE_LAB_THREADS")
    n = requested or (int(env) if env else (os.cpu_count() or 1))
    return max(1, n)


def _synth_one(layout, kind, v_preloss, master_seed, shot_id, dtype):
    p, t, d = layout.params, layout.timing, layout.dsp
    if kind == "vacuum":
        seed = shot_rng_seed(master_seed, shot_id, VACUUM_STREAM)
        return synthesize_vacuum_shot(p, t, seed, d, shot_id, dtype=dtype)
    seed = shot_rng_seed(master_seed, shot_id)
    return synthesize_shot(p, t, v_preloss, seed, d, shot_id, dtype=dtype)


def synthesize_batch(layout: TraceLayout, shot_ids, master_seed: int, v_preloss: float = 1.0,
                     kind: str = "signal", workers: int | None = None,
                     dtype=np.complex64) -> list[ShotRecord]:
    """Shots ``shot_ids`` in order; identical for any ``workers``."""
    if kind not in ("signal", "vacuum"):
        raise ValueError(f"unknown shot kind {kind!r}")
    ids = list(shot_ids)
    nw = min(worker_count(workers), max(1, len(ids)))
    if nw == 1:
        return [_synth_one(layout, kind, v_preloss, master_seed, i, dtype) for i in ids]
    chunks = np.array_split(np.array(ids, dtype=np.int64), nw)
    with ThreadPoolExecutor(nw) as ex:
        parts = ex.map(lambda c: [_synth_one(layout, kind, v_preloss, master_seed, int(i), dtype) for i in c],
                       chunks)
        return [s for part in parts for s in part]


def iter_batches(n_shots: int, batch_size: int = BATCH_SIZE):
    for start in range(0, n_shots, batch_size):
        yield range(start, min(start + batch_size, n_shots))


@dataclass
class Extraction:
    """Per-shot raw window integrals and phase-correction diagnostics."""

    z: dict[str, np.ndarray]
    theta: np.ndarray
    delta: np.ndarray
    snr: np.ndarray
    residual_deg: np.ndarray
    ok: np.ndarray
    shot_ids: np.ndarray
    segments: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.shot_ids)

    @property
    def n_excluded(self) -> int:
        return int(np.sum(~self.ok))

    @classmethod
    def concat(cls, parts: list["Extraction"]) -> "Extraction":
        if not parts:
            raise ValueError("nothing to concatenate")
        labels = parts[0].z.keys()
        return cls({k: np.concatenate([p.z[k] for p in parts]) for k in labels},
                   *(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("theta", "delta", "snr", "residual_deg", "ok", "shot_ids")))

    def normalized(self, label: str, calibration: VacuumCalibration, only_ok: bool = True) -> np.ndarray:
        z = self.z[label] / calibration.gain(label)
        return z[self.ok] if only_ok else z

    def quads(self, pair: str, calibration: VacuumCalibration, only_ok: bool = True) -> QuadSet:
        a, r = pair[:2], pair[2:]
        return QuadSet.from_complex(self.normalized(a, calibration, only_ok),
                                    self.normalized(r, calibration, only_ok), pair)


class Extractor:
    """Phase correction plus windowed quadrature integrals for one layout.

    With ``correct=False`` the integrals are taken on the raw trace.  With
    ``segments=True`` the corrected and uncorrected baseband of the ASE and
    RASE regions is kept for correlation analysis.
    """

    def __init__(self, layout: TraceLayout, correct: bool = True, quantize: bool = False,
                 min_snr: float = DEFAULT_MIN_SNR, segments: bool = False, workers: int | None = None):
        self.layout = layout
        self.correct = correct
        self.segments = segments
        self.workers = worker_count(workers)
        self.phase = PhaseCorrector(layout, quantize, min_snr)
        n = layout.n_samples
        self.labels = layout.labels
        self.kernels = np.array([kernel_spectrum(layout, layout.windows[l].dense(n), layout.freq(l))
                                 for l in self.labels])

    def process(self, samples, shot_ids=None) -> Extraction:
        lay = self.layout
        x = np.asarray(samples, dtype=np.complex128)
        if x.ndim != 2 or x.shape[1] != lay.n_samples:
            raise ValueError(f"expected (shots, {lay.n_samples}) samples, got {x.shape}")
        spec = sfft.fft(x, axis=-1, workers=self.workers)
        theta, delta, snr, residual, ok = self.phase.estimate(spec)
        if not np.all(ok):
            log.info("%d shot(s) below the reference SNR threshold", int(np.sum(~ok)))
        cspec = cmul(spec, self.phase.ramp(theta, delta)) if self.correct else spec
        vals = row_dot(cspec, self.kernels) * (lay.dt_us / lay.n_samples)
        z = {l: vals[:, k] for k, l in enumerate(self.labels)}
        ids = np.arange(len(x)) if shot_ids is None else np.asarray(shot_ids)
        out = Extraction(z, theta, delta, snr, residual, ok, ids)
        if self.segments:
            out.segments = self._segments(x, cspec)
        return out

    def _segments(self, raw, cspec):
        lay, w = self.layout, self.workers
        p, d = lay.params, lay.dsp
        corrected = sfft.ifft(cspec, axis=-1, workers=w)
        out = {}
        for tag, trace in (("", corrected), ("raw_", raw)):
            a = demodulate_filter(trace, p.f_ase_if_hz, d.filter_bw_hz, p.sample_rate_hz,
                                  d.width_convention, w)
            r = demodulate_filter(trace, p.f_rase_if_hz, d.filter_bw_hz, p.sample_rate_hz,
                                  d.width_convention, w)
            out[tag + "ase"] = a[:, lay.ase_region]
            out[tag + "rase"] = r[:, lay.rase_region]
        return out

    def process_records(self, records: list[ShotRecord]) -> Extraction:
        return self.process(np.stack([r.samples for r in records]), [r.shot_id for r in records])


def run_ensemble(layout: TraceLayout, n_shots: int, master_seed: int, v_preloss: float = 1.0,
                 kind: str = "signal", extractor: Extractor | None = None,
                 workers: int | None = None, sink=None, consumers=(),
                 batch_size: int = BATCH_SIZE) -> Extraction:
    """Synthesize ``n_shots`` and extract them batch by batch.

    ``sink`` (e.g. a :class:`~rase_lab.shotfile.ShotWriter`) receives every
    record.  Each callable in ``consumers`` is handed every batch's
    :class:`Extraction` (used for streaming correlation sums).
    """
    if n_shots <= 0:
        raise ValueError("n_shots must be positive")
    extractor = extractor or Extractor(layout, workers=workers)
    parts = []
    for ids in iter_batches(n_shots, batch_size):
        recs = synthesize_batch(layout, ids, master_seed, v_preloss, kind, workers)
        if sink is not None:
            for r in recs:
                sink.write(r)
        ex = extractor.process_records(recs)
        for c in consumers:
            c(ex)
        ex.segments = {}
        parts.append(ex)
    return Extraction.concat(parts)


def extract_records(layout: TraceLayout, records, extractor: Extractor | None = None,
                    consumers=(), batch_size: int = BATCH_SIZE) -> Extraction:
    """Extract an iterable of recorded shots (e.g. from a shot file)."""
    extractor = extractor or Extractor(layout)
    parts, buf = [], []

    def flush():
        ex = extractor.process_records(buf)
        for c in consumers:
            c(ex)
        ex.segments = {}
        parts.append(ex)
        buf.clear()

    for rec in records:
        buf.append(rec)
        if len(buf) == batch_size:
            flush()
    if buf:
        flush()
    if not parts:
        raise ValueError("no shots to analyse")
    return Extraction.concat(parts)


def calibration_from_extraction(layout: TraceLayout, ex: Extraction) -> VacuumCalibration:
    gains = {l: gain_from_vacuum(ex.z[l][ex.ok]) for l in layout.labels}
    d = layout.dsp
    dsp = dict(h_us=d.window.h_us, w_hz=d.window.w_hz, cutoff_us=d.window.cutoff_us,
               filter_bw_hz=d.filter_bw_hz, width_convention=d.width_convention)
    return VacuumCalibration(gains, int(np.sum(ex.ok)), {l: layout.freq(l) for l in layout.labels}, dsp)


def calibrate_vacuum(layout: TraceLayout, n_shots: int, master_seed: int,
                     workers: int | None = None, sink=None) -> VacuumCalibration:
    """Vacuum gains from ``n_shots`` signal-free shots through the same chain."""
    ex = run_ensemble(layout, n_shots, master_seed, kind="vacuum", workers=workers, sink=sink)
    return calibration_from_extraction(layout, ex)
