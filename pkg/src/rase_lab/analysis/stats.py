"""Variance error bars and the inseparability sweep."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from ..core import InsepCurve, QuadSet

SEPARABLE_BOUND = 2.0
DENSE_STEP = 1e-3


def default_b_grid(n: int = 1001) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


def variance_with_error(samples) -> tuple[float, float]:
    """Sample variance and its Gaussian-theory standard error V*sqrt(2/(N-1))."""
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples")
    v = float(np.var(x, ddof=1))
    return v, v * math.sqrt(2.0 / (n - 1))


def bootstrap_variance_error(samples, n_resamples: int = 1000, rng=None) -> float:
    x = np.asarray(samples, dtype=float).ravel()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    idx = rng.integers(0, x.size, size=(n_resamples, x.size))
    return float(np.std(np.var(x[idx], axis=1, ddof=1), ddof=1))


def confidence(i_min: float, sigma: float) -> float:
    """One-sided Gaussian probability that the true minimum lies below 2."""
    if sigma <= 0:
        return float("nan")
    return float(ndtr((SEPARABLE_BOUND - i_min) / sigma))


def moments(q: QuadSet) -> dict[str, float]:
    """Variances and the x1x2 / p1p2 covariances (ddof=1)."""
    x = np.vstack([q.x1, q.p1, q.x2, q.p2])
    c = np.cov(x, ddof=1)
    return dict(vx1=c[0, 0], vp1=c[1, 1], vx2=c[2, 2], vp2=c[3, 3],
                cx=c[0, 2], cp=c[1, 3], n=x.shape[1])


def uv_variances(m: dict, b):
    """var(u) and var(v) for weights ``b`` from the moment dict."""
    b = np.asarray(b, dtype=float)
    cross = 2.0 * np.sqrt(b * (1.0 - b))
    var_u = b * m["vx1"] + (1.0 - b) * m["vx2"] + cross * m["cx"]
    var_v = b * m["vp1"] + (1.0 - b) * m["vp2"] - cross * m["cp"]
    return var_u, var_v


def locate_minimum(func, step: float = DENSE_STEP) -> float:
    """Dense scan of ``func`` on [0, 1] refined by a three-point parabola."""
    b = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    f = func(b)
    i = int(np.argmin(f))
    if i == 0 or i == len(b) - 1:
        return float(b[i])
    y0, y1, y2 = f[i - 1], f[i], f[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom <= 0:
        return float(b[i])
    shift = 0.5 * (y0 - y2) / denom
    b_ref = float(b[i] + np.clip(shift, -1.0, 1.0) * step)
    return b_ref if func(np.array([b_ref]))[0] <= y1 else float(b[i])


def _curve_from_moments(m, b_grid, window_pair):
    n = m["n"]
    rel = math.sqrt(2.0 / (n - 1))

    def total(b):
        u, v = uv_variances(m, b)
        return u + v

    def sig(b):
        u, v = uv_variances(m, b)
        return rel * np.sqrt(u**2 + v**2)

    b_grid = np.asarray(b_grid, dtype=float)
    b_min = locate_minimum(total)
    i_min = float(total(np.array([b_min]))[0])
    s_min = float(sig(np.array([b_min]))[0])
    return InsepCurve(b_grid, total(b_grid), sig(b_grid), b_min, i_min, s_min,
                      confidence(i_min, s_min), window_pair, n)


def inseparability_sweep(q: QuadSet, b_grid=None) -> InsepCurve:
    """var(u) + var(v) over the weight grid, with 1-sigma bands.

    u = sqrt(b) x1 + sqrt(1-b) x2, v = sqrt(b) p1 - sqrt(1-b) p2.  Each
    variance carries the V*sqrt(2/(N-1)) error; the two add in quadrature.
    """
    b_grid = default_b_grid() if b_grid is None else np.asarray(b_grid, dtype=float)
    if b_grid.size == 0:
        raise ValueError("empty b grid")
    if np.any((b_grid < 0) | (b_grid > 1)):
        raise ValueError("b grid must lie in [0, 1]")
    if len(q) < 2:
        raise ValueError("need at least two shots")
    return _curve_from_moments(moments(q), b_grid, q.window_pair)


def straight_line_deviation(curve: InsepCurve) -> float:
    """Largest |value - chord between the endpoints| in units of sigma."""
    v0, v1 = curve.value[0], curve.value[-1]
    if curve.b_grid[0] != 0.0 or curve.b_grid[-1] != 1.0:
        raise ValueError("curve grid must span [0, 1]")
    line = v0 + (v1 - v0) * curve.b_grid
    return float(np.max(np.abs(curve.value - line) / curve.sigma))


def bootstrap_minimum(q: QuadSet, n_resamples: int = 200, rng=None) -> tuple[float, float]:
    """Bootstrap standard deviations of (b_min, i_min)."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n = len(q)
    bs, ims = [], []
    grid = np.array([0.0, 1.0])
    for _ in range(n_resamples):
        idx = rng.integers(0, n, size=n)
        c = _curve_from_moments(moments(q.subset(idx)), grid, q.window_pair)
        bs.append(c.b_min)
        ims.append(c.i_min)
    return float(np.std(bs, ddof=1)), float(np.std(ims, ddof=1))
