import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.ndimage import gaussian_filter

from irenhance.errors import ShapeMismatch
from irenhance.imgcore import Domain, Image
from irenhance.metrics import (
    MetricsReport,
    average_gradient,
    entropy,
    evaluate,
    row_col_frequency,
    spatial_frequency,
    std_dev,
    vif,
)

byte_arrays = arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(2, 12)), elements=st.floats(0, 255))

# vif(x, x + N(0, 2/255)) on the fixture below, frozen from this implementation
VIF_NOISE_FIXTURE = 0.8383288513219455


def B(a):
    return Image(np.asarray(a, dtype=float), Domain.BYTE255)


def stripes(h=8, w=8):
    return B(np.tile([0.0, 255.0], (h, w // 2)))


def test_entropy_cases():
    assert entropy(B(np.full((4, 4), 9.0))) == 0.0
    assert entropy(B(np.arange(256.0).reshape(16, 16))) == pytest.approx(8.0, abs=1e-9)
    assert entropy(B([[0.0, 255.0]])) == pytest.approx(1.0, abs=1e-12)


def test_spatial_frequency_cases():
    assert spatial_frequency(B(np.full((4, 4), 3.0))) == 0.0
    rf, cf = row_col_frequency(stripes())
    assert (rf, cf) == (255.0, 0.0)
    assert spatial_frequency(stripes()) == pytest.approx(255.0, abs=1e-6)
    checker = B((np.indices((8, 8)).sum(axis=0) % 2) * 255.0)
    assert spatial_frequency(checker) == pytest.approx(255.0 * math.sqrt(2), abs=1e-9)


def test_average_gradient_cases():
    assert average_gradient(B(np.full((4, 4), 3.0))) == 0.0
    ramp = B(np.tile(np.arange(10.0), (6, 1)))
    assert average_gradient(ramp) == pytest.approx(math.sqrt(0.5), abs=1e-9)
    diag = B(np.add.outer(np.arange(6.0), np.arange(6.0)))
    assert average_gradient(diag) == pytest.approx(1.0, abs=1e-9)
    assert average_gradient(B([[1.0, 5.0, 7.0]])) == 0.0


def test_std_dev_cases():
    assert std_dev(B(np.full((3, 3), 4.0))) == 0.0
    assert std_dev(B([[0.0, 255.0]])) == pytest.approx(127.5, abs=1e-9)
    # population std of {0, 85, 170, 255} = 85 * sqrt(1.25)
    assert std_dev(B([[0.0, 85.0, 170.0, 255.0]])) == pytest.approx(85 * math.sqrt(1.25), abs=1e-9)


def _smooth_fixture():
    rng = np.random.default_rng(2024)
    x = gaussian_filter(rng.random((64, 64)), 2)
    x = (x - x.min()) / (x.max() - x.min())
    y = np.clip(x + rng.normal(0, 2 / 255, x.shape), 0, 1)
    return Image(x, Domain.UNIT), Image(y, Domain.UNIT)


def test_vif_cases():
    x, y = _smooth_fixture()
    assert vif(x, x) == pytest.approx(1.0, abs=1e-6)
    assert vif(x, Image(np.full(x.shape, 0.5), Domain.UNIT)) == pytest.approx(0.0, abs=1e-9)
    v = vif(x, y)
    assert 0.5 < v < 1.0
    assert v == pytest.approx(VIF_NOISE_FIXTURE, rel=1e-9)
    assert math.isnan(vif(B(np.full((40, 40), 7.0)), B(np.full((40, 40), 7.0))))
    with pytest.raises(ShapeMismatch):
        vif(x, Image(np.zeros((3, 3)), Domain.UNIT))


def test_raw_images_rejected():
    with pytest.raises(ValueError):
        entropy(Image(np.zeros((2, 2))))


@settings(max_examples=60, deadline=None)
@given(byte_arrays, st.randoms(use_true_random=False))
def test_entropy_permutation_invariant(a, rnd):
    flat = a.ravel().tolist()
    rnd.shuffle(flat)
    assert entropy(B(a)) == entropy(B(np.reshape(flat, a.shape)))


@settings(max_examples=60, deadline=None)
@given(byte_arrays)
def test_transpose_invariance(a):
    t = a.T.copy()
    rf, cf = row_col_frequency(B(a))
    rf_t, cf_t = row_col_frequency(B(t))
    assert rf == pytest.approx(cf_t, rel=1e-12, abs=1e-12)
    assert cf == pytest.approx(rf_t, rel=1e-12, abs=1e-12)
    assert spatial_frequency(B(a)) == pytest.approx(spatial_frequency(B(t)), rel=1e-12, abs=1e-12)
    assert average_gradient(B(a)) == pytest.approx(average_gradient(B(t)), rel=1e-12, abs=1e-12)
    assert std_dev(B(a)) == pytest.approx(std_dev(B(t)), rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(np.int64, st.tuples(st.integers(2, 12), st.integers(2, 12)), elements=st.integers(0, 255)))
def test_unit_and_byte_views_agree(a):
    # integer levels survive the /255 round trip exactly enough for the histogram
    b = B(a.astype(float))
    u = Image(a / 255.0, Domain.UNIT)
    assert entropy(u) == entropy(b)
    for fn in (spatial_frequency, average_gradient, std_dev):
        assert fn(u) == pytest.approx(fn(b), rel=1e-12, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(byte_arrays)
def test_report_invariants(a):
    rep = evaluate(B(a))
    assert 0 <= rep.en <= 8
    assert rep.sf >= 0 and rep.ag >= 0 and rep.sd >= 0
    assert rep.vif is None


def test_report_serialisation():
    rep = MetricsReport(1.0, 2.0, 3.0, 4.0, float("nan"))
    assert rep.as_dict() == {"en": 1.0, "sf": 2.0, "ag": 3.0, "sd": 4.0, "vif": None}
    assert MetricsReport(1.0, 2.0, 3.0, 4.0).to_text() == "en = 1.000000\nsf = 2.000000\nag = 3.000000\nsd = 4.000000\n"
    x, y = _smooth_fixture()
    assert evaluate(y, reference=x).vif == pytest.approx(VIF_NOISE_FIXTURE, rel=1e-9)
