import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from irenhance.errors import MarkerBelowMask, MarkerExceedsMask, ShapeMismatch
from irenhance.imgcore import Domain, Image
from irenhance.morphology import (
    Connectivity,
    StructuringElement,
    dilate,
    erode,
    geodesic_dilate_unit,
    geodesic_erode_unit,
    gmr,
    large_se_side,
    make_centered_square_se,
    make_square_se,
    reconstruct_by_dilation,
    reconstruct_by_erosion,
)

from oracles import brute_dilate, brute_erode, naive_gmr, naive_reconstruct_dilation

E4, E8 = Connectivity.FOUR, Connectivity.EIGHT
unit_arrays = arrays(
    np.float64, st.tuples(st.integers(1, 10), st.integers(1, 10)), elements=st.floats(0, 1)
)
offset_sets = st.frozensets(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), min_size=1, max_size=6)


def U(a):
    return Image(np.asarray(a, dtype=float), Domain.UNIT)


def test_make_square_se():
    assert make_square_se(1).offsets == {(0, 0)}
    assert make_square_se(2).offsets == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert large_se_side(512, 640) == 102
    assert large_se_side(8, 8) == 3
    with pytest.raises(ValueError):
        make_square_se(0)


def test_se_validation():
    with pytest.raises(ValueError):
        StructuringElement(frozenset())
    with pytest.raises(ValueError):
        StructuringElement.from_offsets([(0, 0), (0, 0)])
    se = StructuringElement.from_offsets([(0, 1), (2, 0)])
    assert se.reflect().offsets == {(0, -1), (-2, 0)}
    assert se.extent == (3, 2)


def test_connectivity_offsets_include_centre():
    assert (0, 0) in E4.offsets and len(E4.offsets) == 5
    assert (0, 0) in E8.offsets and len(E8.offsets) == 9


def test_dilate_erode_examples():
    c3 = make_centered_square_se(3)
    centre = np.zeros((3, 3))
    centre[1, 1] = 1
    assert np.all(dilate(U(centre), c3).data == 1)
    assert np.all(erode(U(1 - centre), c3).data == 0)
    f = U(np.random.default_rng(0).random((5, 7)))
    ident = make_square_se(1)
    assert np.array_equal(dilate(f, ident).data, f.data)
    assert np.array_equal(erode(f, ident).data, f.data)
    assert np.all(dilate(U(np.full((4, 4), 0.3)), make_square_se(3)).data == 0.3)


@settings(max_examples=150, deadline=None)
@given(unit_arrays, offset_sets)
def test_dilate_erode_match_brute_force(a, offs):
    se = StructuringElement(offs)
    assert np.array_equal(dilate(U(a), se).data, brute_dilate(a, se.offsets))
    assert np.array_equal(erode(U(a), se).data, brute_erode(a, se.offsets))


@settings(max_examples=60, deadline=None)
@given(unit_arrays, st.integers(1, 12))
def test_square_fast_path_matches_brute_force(a, n):
    se = make_square_se(n)
    assert np.array_equal(dilate(U(a), se).data, brute_dilate(a, se.offsets))
    assert np.array_equal(erode(U(a), se).data, brute_erode(a, se.offsets))


def test_geodesic_unit_examples():
    f = U([[0.0, 1.0, 0.0]])
    g = U([[1.0, 1.0, 1.0]])
    assert geodesic_dilate_unit(f, g, E4).data.tolist() == [[1.0, 1.0, 1.0]]
    assert np.array_equal(geodesic_dilate_unit(g, g).data, g.data)
    z = U(np.zeros((3, 3)))
    assert np.all(geodesic_dilate_unit(z, U(np.ones((3, 3)))).data == 0)
    assert geodesic_erode_unit(U([[1.0, 0.0, 1.0]]), U([[0.0, 0.0, 0.0]]), E4).data.tolist() == [[0.0, 0.0, 0.0]]


@settings(max_examples=100, deadline=None)
@given(unit_arrays, st.data())
def test_geodesic_erode_is_dual(a, data):
    b = data.draw(arrays(np.float64, a.shape, elements=st.floats(0, 1)))
    hi, lo = np.maximum(a, b), np.minimum(a, b)
    for conn in (E4, E8):
        ero = geodesic_erode_unit(U(hi), U(lo), conn).data
        dil = geodesic_dilate_unit(Image(-hi), Image(-lo), conn).data
        assert np.array_equal(ero, -dil)
        assert np.all(lo <= ero) and np.all(ero <= hi)


def test_order_and_shape_errors():
    with pytest.raises(MarkerExceedsMask):
        geodesic_dilate_unit(U([[1.0]]), U([[0.0]]))
    with pytest.raises(MarkerBelowMask):
        geodesic_erode_unit(U([[0.0]]), U([[1.0]]))
    with pytest.raises(MarkerExceedsMask):
        reconstruct_by_dilation(U([[1.0]]), U([[0.0]]))
    with pytest.raises(MarkerBelowMask):
        reconstruct_by_erosion(U([[0.0]]), U([[1.0]]))
    with pytest.raises(ShapeMismatch):
        reconstruct_by_dilation(U([[0.0]]), U([[1.0, 1.0]]))


def test_reconstruction_examples():
    rng = np.random.default_rng(1)
    mask = U(rng.random((6, 6)))
    assert np.array_equal(reconstruct_by_dilation(mask, mask).data, mask.data)
    assert np.array_equal(reconstruct_by_erosion(mask, mask).data, mask.data)
    assert np.all(reconstruct_by_dilation(U(np.zeros((6, 6))), mask).data == 0)
    assert np.all(reconstruct_by_erosion(U(np.ones((6, 6))), U(np.zeros((6, 6)))).data == 1)


def test_reconstruction_floods_only_connected_components():
    mask = np.zeros((5, 7))
    mask[1:4, 1:3] = 0.8  # component touching the marker
    mask[1:4, 4:6] = 0.6  # isolated component
    marker = np.zeros_like(mask)
    marker[2, 1] = 0.8
    out = reconstruct_by_dilation(U(marker), U(mask), E4).data
    assert np.all(out[1:4, 1:3] == 0.8)
    assert np.all(out[:, 3:] == 0)


@settings(max_examples=80, deadline=None)
@given(unit_arrays, st.data(), st.sampled_from([E4, E8]))
def test_reconstruction_matches_naive_fixpoint(a, data, conn):
    b = data.draw(arrays(np.float64, a.shape, elements=st.floats(0, 1)))
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    assert np.array_equal(reconstruct_by_dilation(U(lo), U(hi), conn).data, naive_reconstruct_dilation(lo, hi, int(conn)))
    ero = reconstruct_by_erosion(U(hi), U(lo), conn).data
    assert np.array_equal(ero, -reconstruct_by_dilation(Image(-hi), Image(-lo), conn).data)


def test_reconstruction_long_serpentine_path():
    # a one-pixel corridor that snakes back and forth defeats raster scans alone
    mask = np.zeros((21, 21))
    for r in range(0, 21, 2):
        mask[r, :] = 1.0
    for k, r in enumerate(range(1, 21, 2)):
        mask[r, 20 if k % 2 == 0 else 0] = 1.0
    marker = np.zeros_like(mask)
    marker[20, 0 if len(range(1, 21, 2)) % 2 == 0 else 20] = 1.0
    for conn in (E4, E8):
        out = reconstruct_by_dilation(U(marker), U(mask), conn).data
        assert np.array_equal(out, naive_reconstruct_dilation(marker, mask, int(conn)))
        assert np.array_equal(out, mask)


def test_gmr_examples():
    b3 = make_square_se(3)
    speck = np.zeros((9, 9))
    speck[4, 4] = 1.0
    assert np.all(gmr(U(speck), b3).data == 0)
    assert np.all(gmr(U(1 - speck), b3).data == 1)
    assert np.all(gmr(U(np.full((5, 6), 0.42)), b3).data == 0.42)


def test_gmr_keeps_large_structures():
    a = np.zeros((12, 12))
    a[2:8, 3:9] = 1.0
    out = gmr(U(a), make_square_se(3)).data
    assert np.array_equal(out, a)


@settings(max_examples=60, deadline=None)
@given(unit_arrays, st.integers(1, 4), st.sampled_from([E4, E8]))
def test_gmr_matches_oracle_and_bounds(a, n, conn):
    se = make_square_se(n)
    t = U(a)
    out = gmr(t, se, conn).data
    assert np.array_equal(out, naive_gmr(a, se.offsets, int(conn)))
    s = reconstruct_by_dilation(U(np.minimum(brute_erode(a, se.offsets), a)), t, conn).data
    assert np.all(s <= a)
    assert np.all(out >= s)
    # opening by reconstruction is idempotent
    again = reconstruct_by_dilation(U(np.minimum(brute_erode(s, se.offsets), s)), U(s), conn).data
    assert np.array_equal(again, s)


@settings(max_examples=60, deadline=None)
@given(unit_arrays, st.data(), st.integers(1, 4))
def test_gmr_is_increasing(a, data, n):
    bump = data.draw(arrays(np.float64, a.shape, elements=st.floats(0, 1)))
    t1, t2 = a, np.maximum(a, bump)
    se = make_square_se(n)
    assert np.all(gmr(U(t1), se).data <= gmr(U(t2), se).data)
