import math
import warnings

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from rase_lab.analysis.model import (
    efficiency_estimate, efficiency_from_variances, model_prediction, predicted_rase_variance,
)
from rase_lab.core import QuadSet


def _oracle(v1, eta, inv_L, idealized=True):
    """Independent bounded scalar minimization of the loss model."""
    v = (v1 - 1 + inv_L) / inv_L
    a = inv_L * v + 1 - inv_L
    r = inv_L * (eta * v + 1 - eta) + 1 - inv_L
    c = inv_L * math.sqrt(eta) * (v if idealized else math.sqrt(v * v - 1))
    res = minimize_scalar(lambda b: 2 * (b * a + (1 - b) * r - 2 * math.sqrt(b * (1 - b)) * c),
                          bounds=(0, 1), method="bounded", options=dict(xatol=1e-12))
    return res.x, res.fun


# frozen from _oracle
ORACLE = {
    (1.453, 0.032, 0.25, True): (0.0662792, 1.9619819),
    (1.453, 0.032, 0.25, False): (0.0593265, 1.9699575),
}


@pytest.mark.parametrize("key", list(ORACLE))
def test_against_frozen_oracle(key):
    *args, idealized = key
    m = model_prediction(*args, idealized=idealized)
    b, i = ORACLE[key]
    assert m.b_min == pytest.approx(b, abs=1e-5)
    assert m.i_min == pytest.approx(i, abs=1e-6)
    assert (b, i) == pytest.approx(_oracle(*args, idealized), abs=1e-6)


def test_published_minimum():
    m = model_prediction(1.453, 0.032, 0.25)
    assert m.i_min == pytest.approx(1.962, abs=0.001)
    assert m.b_min == pytest.approx(0.068, abs=0.003)
    assert predicted_rase_variance(1.453, 0.032, 0.25) == pytest.approx(1.015, abs=1e-3)


def test_perfect_echo_limits():
    big = 1e9
    m = model_prediction(0.25 * big + 0.75, 1.0, 0.25)
    assert m.i_min == pytest.approx(1.5, abs=1e-3)
    assert m.b_min == pytest.approx(0.5, abs=5e-3)
    m = model_prediction(big, 1.0, 1.0)
    assert m.i_min == pytest.approx(0.0, abs=1e-3)
    assert m.b_min == pytest.approx(0.5, abs=5e-3)


def test_model_endpoints():
    m = model_prediction(1.453, 0.032, 0.25)
    assert m.endpoints[1] == pytest.approx(2 * 1.453)
    assert m.endpoints[0] == pytest.approx(2 * predicted_rase_variance(1.453, 0.032, 0.25))


def test_model_sigma_band():
    m = model_prediction(1.453, 0.032, 0.25, n_shots=8000)
    assert m.sigma_min == pytest.approx(m.i_min / 2 * math.sqrt(2) * math.sqrt(2 / 7999))
    assert 0.9 < m.confidence < 1.0


@pytest.mark.parametrize("args", [(0.5, 0.032, 0.25), (1.453, 0.0, 0.25), (1.453, 0.032, 1.2)])
def test_model_rejects(args):
    with pytest.raises(ValueError):
        model_prediction(*args)


def test_efficiency_examples():
    assert efficiency_from_variances(1.453, 1.015) == pytest.approx(0.033, abs=0.002)
    assert efficiency_from_variances(1.453, 1.453) == 1.0
    with pytest.warns(UserWarning):
        assert efficiency_from_variances(1.453, 1.0) == 0.0


def test_efficiency_estimate_on_data(rng):
    n = 200_000
    x = rng.standard_normal((4, n)) * np.sqrt([[1.453], [1.453], [1.2], [1.2]])
    assert efficiency_estimate(QuadSet(*x)) == pytest.approx(0.2 / 0.453, rel=0.03)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        efficiency_estimate(QuadSet(*x))
