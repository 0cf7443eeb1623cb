import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughwpi.lift import (
    CrossIntegral,
    RoughLift,
    cross_norm,
    lift,
    outer_increments,
    rough_distance,
    subtract,
    translation_rhs,
)
from roughwpi.paths import DiscretePath, LevelMismatchError, RngStream, sample_brownian
from roughwpi.properties import inequality_suite
from roughwpi.variation import level2_norm, pvar_path, qvar_max


def direct_integral(x: np.ndarray, z: np.ndarray, i: int, j: int) -> np.ndarray:
    """Segment-by-segment closed form of int_{t_i}^{t_j} (x - x(t_i)) (x) dz."""
    out = np.zeros((x.shape[1], z.shape[1]))
    for k in range(i, j):
        dx, dz = x[k + 1] - x[k], z[k + 1] - z[k]
        out += np.outer(x[k] - x[i] + 0.5 * dx, dz)
    return out


def parabola(level):
    return DiscretePath.from_function(lambda t: np.column_stack([t, t * t]), 2, level)


def test_chen_identity_exhaustive_small_grid():
    for seed in range(3):
        L = lift(sample_brownian(3, 4, RngStream(seed)))
        n = L.base.n_points
        D2 = L.level2_table().dense()
        v = L.base.values
        for s in range(n):
            for t in range(s, n):
                for u in range(t, n):
                    res = D2[s, u] - D2[s, t] - D2[t, u] - np.outer(v[t] - v[s], v[u] - v[t])
                    assert np.max(np.abs(res)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(5, 12))
def test_chen_identity_sampled_triples(seed, N):
    L = lift(sample_brownian(2, N, RngStream(seed)))
    g = np.random.default_rng(seed)
    for _ in range(50):
        s, t, u = np.sort(g.integers(0, 2**N + 1, size=3))
        res = L.level2(s, u) - L.level2(s, t) - L.level2(t, u) - np.outer(L.level1(s, t), L.level1(t, u))
        assert np.max(np.abs(res)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_symmetric_part_is_half_square(seed):
    L = lift(sample_brownian(3, 6, RngStream(seed)))
    g = np.random.default_rng(seed)
    for _ in range(20):
        i, j = np.sort(g.integers(0, 65, size=2))
        a = L.level2(i, j)
        inc = L.level1(i, j)
        np.testing.assert_allclose(a + a.T, np.outer(inc, inc), atol=1e-12)
        np.testing.assert_allclose(np.diag(a), 0.5 * inc**2, atol=1e-12)


def test_parabola_lift_limit():
    exact = np.array([[0.5, 2 / 3], [1 / 3, 0.5]])
    for N in (6, 8, 10):
        L = lift(parabola(N))
        assert np.max(np.abs(L.level2(0, 2**N) - exact)) <= 2.0**-N


def test_zero_lift():
    L = lift(DiscretePath.zeros(2, 5))
    assert np.all(L.level2_table().dense() == 0)


def test_level2_basic_queries(brownian):
    L = lift(brownian(2, 5))
    assert np.all(L.level2(7, 7) == 0)
    np.testing.assert_array_equal(L.level2(0, 32), L.prefix2[-1])
    with pytest.raises(ValueError):
        L.level2(3, 2)


def test_level2_matches_direct_integration(brownian):
    w = brownian(2, 6, seed=4)
    L = lift(w)
    g = np.random.default_rng(1)
    for _ in range(40):
        i, j = np.sort(g.integers(0, 65, size=2))
        np.testing.assert_allclose(L.level2(i, j), direct_integral(w.values, w.values, i, j), atol=1e-12)


def test_cross_integral_examples(line1):
    assert CrossIntegral(line1(6), line1(6))(0, 64)[0, 0] == pytest.approx(0.5, abs=1e-14)
    sq = DiscretePath.from_function(lambda t: t * t, 1, 10)
    c = CrossIntegral(line1(10), sq)(0, 2**10)[0, 0]
    assert abs(c - 2 / 3) <= 2.0**-10


def test_cross_matches_direct_integration(brownian):
    x, z = brownian(2, 5, index=0), brownian(3, 5, index=1)
    C = CrossIntegral(x, z)
    for i, j in [(0, 32), (3, 17), (10, 11), (5, 5)]:
        np.testing.assert_allclose(C(i, j), direct_integral(x.values, z.values, i, j), atol=1e-12)


def test_cross_transpose_identity_all_pairs(brownian):
    x, z = brownian(2, 5, index=0), brownian(3, 5, index=1)
    lhs = CrossIntegral(x, z).table().dense() + np.swapaxes(CrossIntegral(z, x).table().dense(), -1, -2)
    rhs = outer_increments(x, z).dense()
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_cross_is_additive_in_first_argument(brownian):
    w, h, z = brownian(2, 6, index=0), brownian(2, 6, index=1), brownian(1, 6, index=2)
    lhs = CrossIntegral(w + h, z).table().dense()
    rhs = CrossIntegral(w, z).table().dense() + CrossIntegral(h, z).table().dense()
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_cross_level_mismatch(brownian):
    with pytest.raises(LevelMismatchError):
        CrossIntegral(brownian(1, 4), brownian(1, 5))


def test_cross_norm_with_empty_dimension(brownian):
    assert cross_norm(DiscretePath.zeros(0, 4), brownian(1, 4), 2.5) == 0.0


def test_subtract_examples(brownian):
    h = brownian(2, 5)
    assert np.all(subtract(lift(h), h).level2_table().dense() == 0)
    Lw = lift(h)
    assert np.array_equal(subtract(Lw, DiscretePath.zeros(2, 5)).prefix2, Lw.prefix2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_translation_identity(seed):
    w = sample_brownian(2, 8, RngStream(seed, 0))
    h = sample_brownian(2, 8, RngStream(seed, 1)) * 3.0
    direct = lift(w).level2_table() - lift(h).level2_table()
    g = np.random.default_rng(seed)
    rhs = translation_rhs(w, h)
    for _ in range(200):
        i, j = np.sort(g.integers(0, 257, size=2))
        assert np.max(np.abs(direct(i, j) - rhs(i, j))) < 1e-10


def test_rough_distance_zero_and_symmetric(brownian):
    a, b = lift(brownian(2, 6, index=0)), lift(brownian(2, 6, index=1))
    assert rough_distance(a, a, 2.5) == 0.0
    assert rough_distance(a, b, 2.5) == pytest.approx(rough_distance(b, a, 2.5), rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 10))
def test_second_level_difference_bound(seed, scale):
    w = sample_brownian(2, 6, RngStream(seed, 0))
    h = sample_brownian(2, 6, RngStream(seed, 1)) * scale
    p = 2.5
    lhs = qvar_max(lift(w).level2_table() - lift(h).level2_table(), p / 2)
    g = w - h
    rhs = level2_norm(lift(g), p) + 2 * cross_norm(g, h, p) + pvar_path(h, p) * pvar_path(g, p)
    assert lhs <= rhs + 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(-4, 4).filter(lambda c: abs(c) > 1e-3))
def test_scaling(seed, c):
    w = sample_brownian(2, 5, RngStream(seed))
    L, Lc = lift(w), lift(w * c)
    np.testing.assert_allclose(Lc.level2_table().dense(), c * c * L.level2_table().dense(), atol=1e-11)


def test_cross_and_product_inequalities():
    for res in inequality_suite(pairs=100, seed=5):
        assert res.passed, res


def test_prefix_shape_validated(brownian):
    with pytest.raises(ValueError):
        RoughLift(brownian(2, 3), np.zeros((9, 3, 3)))


def test_debug_csv(tmp_path, brownian):
    f = tmp_path / "t.csv"
    lift(brownian(2, 2)).to_csv_debug(f)
    lines = f.read_text().splitlines()
    assert lines[0] == "i,j,l1_1,l1_2,l2_11,l2_12,l2_21,l2_22"
    assert len(lines) == 1 + 5 * 6 // 2
