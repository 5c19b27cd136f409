"""Multimode and storage-time studies built on the full pipeline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import InsepCurve
from ..dsp import VacuumCalibration
from ..layout import TraceLayout, get_layout
from .stats import bootstrap_minimum, inseparability_sweep


def multimode_analysis(ex, layout: TraceLayout, calibration: VacuumCalibration,
                       b_grid=None) -> dict[str, InsepCurve]:
    """Criterion curves for A1R1, A1R2, A2R1 and A2R2 of a two-window run."""
    if layout.timing.n_modes != 2 or set(ex.z) != {"A1", "R1", "A2", "R2"}:
        raise ValueError("multimode analysis needs the two-window layout")
    return {pair: inseparability_sweep(ex.quads(pair, calibration), b_grid)
            for pair in layout.timing.pair_labels()}


@dataclass
class StoragePoint:
    s_us: float
    b_min: float
    b_sigma: float
    i_min: float
    i_sigma: float
    eta: float
    curve: InsepCurve


def storage_sweep(layout: TraceLayout, s_values, n_shots: int, master_seed: int,
                  calibration: VacuumCalibration, v_preloss: float, b_grid=None,
                  n_bootstrap: int = 200, workers=None, run=None) -> list[StoragePoint]:
    """Simulate and analyse one ensemble per storage time.

    Every point reuses the same master seed (common random numbers), so the
    trend in s is not masked by independent sampling noise.  The vacuum gains
    depend only on window shape and IF, so one calibration serves all points.
    ``b_sigma`` is a bootstrap estimate; ``i_sigma`` the propagated error at
    the minimum.
    """
    from ..pipeline import run_ensemble
    from ..simulator import get_plan

    run = run or run_ensemble
    s_values = [float(s) for s in s_values]
    if any(s < 0 for s in s_values):
        raise ValueError("storage times must be non-negative")
    out = []
    for s in s_values:
        lay = get_layout(layout.params, layout.timing.with_storage(s), layout.dsp)
        ex = run(lay, n_shots, master_seed, v_preloss=v_preloss, workers=workers)
        curve = inseparability_sweep(ex.quads("A1R1", calibration), b_grid)
        b_sig, _ = bootstrap_minimum(ex.quads("A1R1", calibration), n_bootstrap, rng=master_seed)
        eta = get_plan(lay.params, lay.timing, lay.dsp).etas[0]
        out.append(StoragePoint(s, curve.b_min, b_sig, curve.i_min, curve.sigma_min, eta, curve))
    return out


def monotone_within(values, sigmas, increasing: bool = True) -> bool:
    """True if consecutive steps never move against the trend by more than 1 sigma."""
    v, s = np.asarray(values, float), np.asarray(sigmas, float)
    step = np.diff(v) if increasing else -np.diff(v)
    tol = np.maximum(s[:-1], s[1:])
    return bool(np.all(step >= -tol))
