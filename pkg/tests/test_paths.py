import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughwpi.paths import (
    DiscretePath,
    LevelMismatchError,
    RngStream,
    check_levels,
    cm_norm,
    dyadic_project,
    length,
    sample_brownian,
)

from conftest import path_from


def test_level_zero_sample_is_single_gaussian_increment():
    w = sample_brownian(3, 0, RngStream(7))
    assert w.values.shape == (2, 3)
    assert np.all(w.values[0] == 0)
    g = RngStream(7).generator().standard_normal(3)
    np.testing.assert_array_equal(w.values[1], g)


def test_same_stream_gives_identical_paths():
    a = sample_brownian(2, 8, RngStream(11, 5))
    b = sample_brownian(2, 8, RngStream(11, 5))
    assert a == b and a.values.tobytes() == b.values.tobytes()


def test_distinct_streams_differ():
    a = sample_brownian(1, 6, RngStream(11, 0))
    b = sample_brownian(1, 6, RngStream(11, 1))
    c = sample_brownian(1, 6, RngStream(11, 0, purpose=1))
    assert a != b and a != c


def test_increment_variance_matches_grid_step():
    inc = np.concatenate([sample_brownian(1, 10, RngStream(3, k)).increments().ravel() for k in range(98)])
    assert inc.size >= 10**5
    v = inc.var() * 2**10
    assert 0.95 <= v <= 1.05


def test_path_invariants_are_enforced():
    with pytest.raises(ValueError):
        DiscretePath(np.array([[1.0], [2.0]]))
    with pytest.raises(ValueError):
        DiscretePath(np.zeros((4, 1)))
    with pytest.raises(ValueError):
        sample_brownian(0, 3, RngStream(0))


def test_values_are_read_only():
    w = sample_brownian(1, 3, RngStream(0))
    with pytest.raises(ValueError):
        w.values[1, 0] = 5.0


def test_projection_at_finest_level_is_identity(brownian):
    w = brownian(2, 6)
    assert dyadic_project(w, 6) == w


def test_projection_at_level_zero_is_chord(brownian):
    w = brownian(2, 5)
    p = dyadic_project(w, 0)
    np.testing.assert_allclose(p.values, np.outer(w.times, w.values[-1]), atol=1e-15)


def test_projection_hand_example():
    w = path_from([0, 1, 0, 1, 0])
    assert np.all(dyadic_project(w, 1).values == 0)


def test_projection_rejects_finer_level(brownian):
    with pytest.raises(ValueError):
        dyadic_project(brownian(1, 3), 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 7), st.data())
def test_projection_idempotent_nested_and_contracting(seed, N, data):
    w = sample_brownian(2, N, RngStream(seed))
    n = data.draw(st.integers(0, N))
    m = data.draw(st.integers(0, n))
    pn = dyadic_project(w, n)
    np.testing.assert_allclose(dyadic_project(pn, n).values, pn.values, atol=1e-14)
    np.testing.assert_allclose(dyadic_project(pn, m).values, dyadic_project(w, m).values, atol=1e-14)
    assert cm_norm(pn) <= cm_norm(w) * (1 + 1e-12)


def test_cm_norm_examples(line1):
    assert cm_norm(line1(7)) == pytest.approx(1.0, abs=1e-14)
    assert cm_norm(DiscretePath.zeros(3, 4)) == 0.0
    assert cm_norm(path_from([0, 1, 1])) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_length_of_line(line1):
    assert length(line1(5)) == pytest.approx(1.0)


def test_csv_round_trip_is_lossless(tmp_path, brownian):
    w = brownian(3, 5, seed=9)
    f = tmp_path / "w.csv"
    w.to_csv(f)
    assert f.read_text().splitlines()[0] == "t,x1,x2,x3"
    back = DiscretePath.from_csv(f)
    assert back.values.tobytes() == w.values.tobytes()


def test_csv_rejects_malformed(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("x,y\n0,0\n")
    with pytest.raises(ValueError):
        DiscretePath.from_csv(f)
    f.write_text("t,x1\n0,0\n0.3,1\n1,2\n")
    with pytest.raises(ValueError):
        DiscretePath.from_csv(f)


def test_level_mismatch(brownian):
    with pytest.raises(LevelMismatchError):
        check_levels(brownian(1, 3), brownian(1, 4))
    with pytest.raises(LevelMismatchError):
        brownian(1, 3) + brownian(1, 4)


def test_arithmetic_and_concat(brownian):
    a, b = brownian(1, 4, index=0), brownian(2, 4, index=1)
    ab = a.concat(b)
    assert ab.dim == 3
    np.testing.assert_array_equal(ab.coordinate(0).values, a.values)
    np.testing.assert_allclose((a * 2 - a).values, a.values)


def test_refine_keeps_values_on_coarse_grid(brownian):
    w = brownian(2, 3)
    r = w.refine(6)
    np.testing.assert_allclose(r.values[::8], w.values, atol=1e-15)
    assert cm_norm(r) == pytest.approx(cm_norm(w))
