"""Loss model of the inseparability criterion and the efficiency estimate."""

from __future__ import annotations

import math
import warnings

import numpy as np

from ..core import InsepCurve, QuadSet
from .stats import confidence, default_b_grid, locate_minimum


def preloss_variance(v1_measured: float, inv_L: float) -> float:
    """Undo the detection beamsplitter: V = (v1 - (1 - 1/L)) / (1/L)."""
    return (v1_measured - (1.0 - inv_L)) / inv_L


def model_prediction(v1_measured, eta, inv_L, b_grid=None, *, idealized=True, n_shots=None) -> InsepCurve:
    """Expected criterion for a lossy, initially entangled ASE/RASE pair.

    The pre-loss covariance is V when ``idealized`` (maximal entanglement)
    and sqrt(V^2 - 1) otherwise.  Detection transmission ``inv_L`` acts on
    both fields, ``eta`` on the echo alone, so the covariance shrinks by
    inv_L*sqrt(eta).  With ``n_shots`` the curve carries the sigma band a
    measurement of that size would have.
    """
    if not (0 < inv_L <= 1 and 0 < eta <= 1):
        raise ValueError("transmissions must lie in (0, 1]")
    v = preloss_variance(v1_measured, inv_L)
    if v < 1.0:
        raise ValueError(f"implied pre-loss variance {v:.4f} < 1: inconsistent with the loss model")
    var1 = inv_L * v + 1 - inv_L
    var2 = inv_L * (eta * v + 1 - eta) + 1 - inv_L
    cov = inv_L * math.sqrt(eta) * (v if idealized else math.sqrt(v * v - 1.0))

    def total(b):
        b = np.asarray(b, dtype=float)
        return 2.0 * (b * var1 + (1 - b) * var2 - 2.0 * np.sqrt(b * (1 - b)) * cov)

    b_grid = default_b_grid() if b_grid is None else np.asarray(b_grid, dtype=float)
    b_min = locate_minimum(total)
    i_min = float(total(b_min))
    value = total(b_grid)
    if n_shots:
        # var(u) = var(v) = value / 2 in this model
        sigma = value / 2 * math.sqrt(2.0) * math.sqrt(2.0 / (n_shots - 1))
        s_min = i_min / 2 * math.sqrt(2.0) * math.sqrt(2.0 / (n_shots - 1))
        conf = confidence(i_min, s_min)
    else:
        sigma = np.zeros_like(value)
        s_min, conf = 0.0, float("nan")
    return InsepCurve(b_grid, value, sigma, b_min, i_min, s_min, conf, "model", n_shots or 0)


def predicted_rase_variance(v1_measured, eta, inv_L) -> float:
    v = preloss_variance(v1_measured, inv_L)
    return inv_L * (eta * v + 1 - eta) + 1 - inv_L


def efficiency_from_variances(var1: float, var2: float) -> float:
    """Rephasing efficiency from the ASE and RASE variances above vacuum.

    Both fields see the same detection loss, so it cancels in the ratio.
    """
    if var1 <= 1.0:
        raise ValueError("ASE variance must exceed the vacuum level")
    if var2 <= 1.0:
        warnings.warn("RASE variance at or below vacuum; efficiency set to 0", stacklevel=2)
        return 0.0
    return (var2 - 1.0) / (var1 - 1.0)


def efficiency_estimate(q: QuadSet) -> float:
    var1 = 0.5 * (np.var(q.x1, ddof=1) + np.var(q.p1, ddof=1))
    var2 = 0.5 * (np.var(q.x2, ddof=1) + np.var(q.p2, ddof=1))
    return efficiency_from_variances(var1, var2)
