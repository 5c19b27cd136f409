import numpy as np
import pytest

from rase_lab.analysis.correlation import CorrelationAccumulator, cross_correlation, fwhm, lag_axis_us
from rase_lab.pipeline import Extraction


def test_mirror_conjugate_peaks_at_zero(layout, rng):
    a_sl, r_sl = layout.ase_region, layout.rase_region
    la, lr = a_sl.stop - a_sl.start, r_sl.stop - r_sl.start
    a = rng.standard_normal(la) + 1j * rng.standard_normal(la)
    r = np.zeros(lr, complex)
    energy = 0.0
    for k in range(la):
        j = layout.two_t0_index - (a_sl.start + k) - r_sl.start
        if 0 <= j < lr:
            r[j] = np.conj(a[k])
            energy += abs(a[k]) ** 2 * layout.dt_us
    c = cross_correlation(a, r, layout.dt_us)
    tau = lag_axis_us(layout)
    i = int(np.argmax(np.abs(c)))
    assert tau[i] == pytest.approx(0.0, abs=1e-9)
    assert c[i] == pytest.approx(energy)


def test_length_mismatch():
    with pytest.raises(ValueError):
        cross_correlation(np.ones((3, 4)), np.ones((2, 4)), 0.02)


def test_fwhm_of_gaussian():
    x = np.linspace(-10, 10, 4001)
    y = np.exp(-0.5 * (x / 1.5) ** 2)
    assert fwhm(x, y) == pytest.approx(2.3548 * 1.5, rel=1e-3)


def _fake_batch(layout, ids, ase, rase):
    n = len(ids)
    z = {l: np.zeros(n, complex) for l in layout.labels}
    ex = Extraction(z, np.zeros(n), np.zeros(n), np.ones((n, 2)), np.zeros(n), np.ones(n, bool),
                    np.asarray(ids))
    ex.segments = dict(ase=ase, rase=rase, raw_ase=ase, raw_rase=rase)
    return ex


def test_shuffled_pairs_are_consecutive_across_batches(layout, rng):
    la = layout.ase_region.stop - layout.ase_region.start
    lr = layout.rase_region.stop - layout.rase_region.start
    ase = rng.standard_normal((6, la)) + 0j
    rase = rng.standard_normal((6, lr)) + 0j
    acc = CorrelationAccumulator(layout)
    acc(_fake_batch(layout, range(4), ase[:4], rase[:4]))
    acc(_fake_batch(layout, range(4, 6), ase[4:], rase[4:]))
    res = acc.result()
    expected = cross_correlation(ase[:-1], rase[1:], layout.dt_us).mean(axis=0)
    assert res.counts["shuffled"] == 5
    assert np.allclose(res.mean["shuffled"], expected)
    assert np.allclose(res.mean["same"], cross_correlation(ase, rase, layout.dt_us).mean(axis=0))
