import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from rase_lab.analysis.stats import (
    bootstrap_minimum, bootstrap_variance_error, confidence, default_b_grid, inseparability_sweep,
    locate_minimum, straight_line_deviation, variance_with_error,
)
from rase_lab.core import QuadSet


def _with_variance(rng, n, v):
    x = rng.standard_normal(n)
    x = (x - x.mean()) / x.std(ddof=1)
    return x * math.sqrt(v)


@pytest.mark.parametrize("v,expected", [(1.453, 0.023), (1.015, 0.016)])
def test_variance_error_published_values(rng, v, expected):
    val, err = variance_with_error(_with_variance(rng, 8000, v))
    assert val == pytest.approx(v)
    assert err == pytest.approx(expected, rel=0.05)


def test_constant_samples():
    assert variance_with_error(np.full(10, 3.0)) == (0.0, 0.0)
    with pytest.raises(ValueError):
        variance_with_error([1.0])


def test_bootstrap_agrees_with_formula(rng):
    x = rng.standard_normal(8000) * 1.2
    _, err = variance_with_error(x)
    assert bootstrap_variance_error(x, 1000, rng=1) == pytest.approx(err, rel=0.2)


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@given(arrays(float, (4, 12), elements=finite))
@settings(max_examples=80, deadline=None)
def test_endpoint_identity_and_positivity(data):
    q = QuadSet(*data)
    c = inseparability_sweep(q, np.linspace(0, 1, 11))
    v0 = np.var(q.x2, ddof=1) + np.var(q.p2, ddof=1)
    v1 = np.var(q.x1, ddof=1) + np.var(q.p1, ddof=1)
    scale = max(1.0, v0, v1)
    assert c.endpoints[0] == pytest.approx(v0, abs=1e-12 * scale)
    assert c.endpoints[1] == pytest.approx(v1, abs=1e-12 * scale)
    assert np.all(c.value >= -1e-12 * scale)


def test_uncorrelated_unit_variance_is_flat(rng):
    q = QuadSet(*rng.standard_normal((4, 8000)))
    c = inseparability_sweep(q)
    assert np.all(np.abs(c.value - 2.0) < 3 * c.sigma)


def test_uncorrelated_unequal_variances_straight_line(rng):
    x = rng.standard_normal((4, 8000)) * np.array([[1.2], [1.2], [1.0], [1.0]])
    c = inseparability_sweep(QuadSet(*x))
    assert straight_line_deviation(c) < 2.0


def test_scale_leaves_argmin(rng):
    a = rng.standard_normal((2, 5000)) * 1.7
    r = -0.3 * a + rng.standard_normal((2, 5000))
    r[1] *= -1
    q = QuadSet(a[0], a[1], r[0], r[1])
    c1 = inseparability_sweep(q)
    c2 = inseparability_sweep(QuadSet(3 * q.x1, 3 * q.p1, 3 * q.x2, 3 * q.p2))
    assert c2.b_min == pytest.approx(c1.b_min, abs=1e-3)
    assert c2.i_min == pytest.approx(9 * c1.i_min)


def test_sigma_propagation(rng):
    q = QuadSet(*rng.standard_normal((4, 8000)))
    c = inseparability_sweep(q, [0.0, 1.0])
    vu = np.var(q.x2, ddof=1)
    vv = np.var(q.p2, ddof=1)
    assert c.sigma[0] == pytest.approx(math.sqrt(2 / 7999) * math.hypot(vu, vv))


def test_confidence_arithmetic():
    sigma = (2 - 1.964) / 2.2
    assert confidence(1.964, sigma) == pytest.approx(0.986, abs=0.002)
    assert confidence(2.0, 0.1) == pytest.approx(0.5)


def test_parabolic_refinement():
    f = lambda b: (np.asarray(b) - 0.123456) ** 2 + 1.0
    assert locate_minimum(f) == pytest.approx(0.123456, abs=1e-9)
    assert locate_minimum(lambda b: np.asarray(b)) == 0.0


@pytest.mark.parametrize("grid", [[], [0.0, 1.5], [-0.1, 0.5]])
def test_bad_grid(rng, grid):
    q = QuadSet(*rng.standard_normal((4, 10)))
    with pytest.raises(ValueError):
        inseparability_sweep(q, grid)


def test_bootstrap_minimum_runs(rng):
    a = rng.standard_normal((2, 2000)) * 1.2
    r = np.vstack([-0.3 * a[0], 0.3 * a[1]]) + rng.standard_normal((2, 2000))
    b_sig, i_sig = bootstrap_minimum(QuadSet(a[0], a[1], r[0], r[1]), 50, rng=1)
    assert 0 < b_sig < 0.2 and 0 < i_sig < 0.2


def test_default_grid():
    g = default_b_grid()
    assert g[0] == 0.0 and g[-1] == 1.0 and len(g) == 1001
