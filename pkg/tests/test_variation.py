import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughwpi import _dp
from roughwpi.lift import CrossIntegral, lift
from roughwpi.paths import DiscretePath, RngStream, length, sample_brownian
from roughwpi.properties import random_table
from roughwpi.variation import (
    TwoParamTable,
    VarParams,
    cp_norm,
    dyadic_constant,
    dyadic_norm,
    level1_norm,
    level2_norm,
    pvar_path,
    qvar,
    qvar_bruteforce,
    qvar_max,
)

from conftest import path_from


def scalar(path: DiscretePath) -> TwoParamTable:
    return TwoParamTable.increments(path).component(0)


def test_monotone_line_has_unit_variation(line1):
    assert qvar(scalar(line1(8)), 2.5) == pytest.approx(1.0, abs=1e-14)


def test_zigzag_hand_example():
    assert qvar(scalar(path_from([0, 1, 0])), 2.5) == pytest.approx(2 ** (1 / 2.5), abs=1e-14)
    assert qvar(scalar(path_from([0, 1, 0])), 2.5) == pytest.approx(1.31951, abs=1e-5)


def test_zero_table():
    assert qvar(scalar(DiscretePath.zeros(1, 5)), 2.5) == 0.0


def test_rejects_bad_input(line1):
    with pytest.raises(ValueError):
        qvar(scalar(line1(3)), 0.9)
    with pytest.raises(ValueError):
        qvar(TwoParamTable.increments(DiscretePath.zeros(2, 3)), 2.0)
    with pytest.raises(ValueError):
        qvar(scalar(line1(5)), 2.0, max_level=4)
    with pytest.raises(ValueError):
        scalar(line1(2))(2, 1)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1.0, 1.25, 2.0, 2.5, 3.7]))
def test_dp_matches_exhaustive_enumeration(seed, q):
    g = np.random.default_rng(seed)
    eta = random_table(g, int(g.integers(0, 4)))
    assert qvar(eta, q) == pytest.approx(qvar_bruteforce(eta.dense()[..., 0], q), abs=1e-12, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(5, 9), st.sampled_from([1.25, 2.5, 1.7]))
def test_pruned_dp_matches_dense_dp(seed, N, q):
    g = np.random.default_rng(seed)
    w = sample_brownian(2, N, RngStream(seed))
    h = sample_brownian(2, N, RngStream(seed, 1))
    tables = [
        random_table(g, N),
        lift(w).level2_table().component((0, 1)),
        CrossIntegral(w, h).table().component((1, 0)),
        (lift(w).level2_table() - lift(h).level2_table()).component((0, 0)),
    ]
    for eta in tables:
        prev = np.zeros(eta.n_points, dtype=np.int64)
        args = (eta.a[0], eta.d[0], eta.b[0], eta.c[0], q, _dp.quarter_code(q))
        fast = _dp.qvar_power(*args, _dp.BLOCK, prev)
        slow = _dp.qvar_power_dense(*args)
        assert fast == pytest.approx(slow, rel=1e-12, abs=1e-300)


def test_witness_partition_attains_value(brownian):
    eta = scalar(brownian(1, 7))
    val, pts = qvar(eta, 2.5, witness=True)
    assert pts[0] == 0 and pts[-1] == eta.n_points - 1
    s = sum(abs(eta(i, j)[0]) ** 2.5 for i, j in zip(pts, pts[1:]))
    assert s ** (1 / 2.5) == pytest.approx(val, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_homogeneity(seed, c):
    eta = scalar(sample_brownian(1, 6, RngStream(seed)))
    assert qvar(eta * c, 2.5) == pytest.approx(abs(c) * qvar(eta, 2.5), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 7))
def test_adding_partition_points_never_decreases(seed, N):
    w = sample_brownian(1, N, RngStream(seed))
    coarse = DiscretePath(w.values[::2])
    assert pvar_path(coarse, 2.5) <= pvar_path(w, 2.5) + 1e-12


def test_level_norm_examples():
    two = DiscretePath.from_function(lambda t: np.column_stack([t, 2 * t]), 2, 6)
    assert level1_norm(lift(two), 2.5) == pytest.approx(2.0, abs=1e-13)
    diag = DiscretePath.from_function(lambda t: np.column_stack([t, t]), 2, 6)
    assert level2_norm(lift(diag), 2.5) == pytest.approx(0.5, abs=1e-13)
    assert cp_norm(lift(diag), 2.5) == pytest.approx(1.0, abs=1e-13)
    z = lift(DiscretePath.zeros(2, 4))
    assert level1_norm(z, 2.5) == level2_norm(z, 2.5) == cp_norm(z, 2.5) == 0.0


def test_cp_norm_symmetric_under_coordinate_swap(brownian):
    w = brownian(3, 6)
    swapped = DiscretePath(w.values[:, [2, 0, 1]])
    assert cp_norm(lift(w), 2.5) == pytest.approx(cp_norm(lift(swapped), 2.5), rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 8))
def test_variation_below_length(seed, N):
    h = sample_brownian(2, N, RngStream(seed))
    assert level1_norm(lift(h), 2.5) <= length(h) + 1e-9


def test_empty_table_max_is_zero():
    assert qvar_max(TwoParamTable.increments(DiscretePath.zeros(0, 3)), 2.0) == 0.0


def test_var_params_validation():
    VarParams(2.5, 2.0)
    for p, k in [(2.0, 2.0), (3.0, 2.5), (2.5, 1.5), (2.5, 1.4)]:
        with pytest.raises(ValueError):
            VarParams(p, k)


def test_dyadic_norm_zero():
    assert dyadic_norm(DiscretePath.zeros(2, 6), VarParams()) == 0.0


def test_dyadic_norm_of_line_matches_series(line1):
    params = VarParams(2.5, 2.0)
    for N in (1, 4, 10):
        series = sum(n**2 * 2.0 ** (n * (1 - 2.5)) for n in range(1, N + 1))
        assert dyadic_norm(line1(N), params) == pytest.approx(series ** (1 / 2.5), rel=1e-12)
    x = 2**-1.5
    closed = (x * (1 + x) / (1 - x) ** 3) ** 0.4
    assert closed == pytest.approx(1.257, abs=5e-4)
    tail = sum(n**2 * x**n for n in range(15, 200))
    got = dyadic_norm(line1(14), params)
    assert got < closed
    assert got**2.5 + tail == pytest.approx(closed**2.5, rel=1e-12)


def test_dyadic_constant_matches_closed_form():
    # sum n^2 x^n = x(1+x)/(1-x)^3 with x = 2^{-p/2}
    for p in (2.2, 2.5, 2.9):
        x = 2 ** (-p / 2)
        expect = (x * (1 + x) / (1 - x) ** 3) ** (1 / p)
        assert dyadic_constant(VarParams(p, 2.0)) == pytest.approx(expect, rel=1e-12)


def test_dyadic_norm_bounded_by_energy(brownian):
    from roughwpi.paths import cm_norm

    params = VarParams()
    C = dyadic_constant(params)
    for k in range(50):
        h = brownian(2, 1 + k % 9, index=k)
        assert dyadic_norm(h, params) <= C * cm_norm(h) * (1 + 1e-12)


def test_table_algebra(brownian):
    w = brownian(2, 4)
    t = lift(w).level2_table()
    s = t + t * 2.0 - t
    np.testing.assert_allclose(s.dense(), 2 * t.dense(), atol=1e-14)
    np.testing.assert_allclose(t.transpose().dense(), np.swapaxes(t.dense(), -1, -2), atol=1e-15)
    assert math.isclose(t(3, 3).sum(), 0.0, abs_tol=1e-15)
