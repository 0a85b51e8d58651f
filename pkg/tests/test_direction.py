import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from scsvm.direction import min_norm_direction, pad


def test_degenerate_segment_gives_subgradient_step():
    g = np.array([1.0, -2.0, 0.5])
    d, lam = min_norm_direction(-g, g)
    assert lam == 0.0
    np.testing.assert_array_equal(d, -g)


def test_hand_case_interior():
    # segment between a=(1,0) and g=(0,1): nearest point to 0 is (1/2,1/2)
    d, lam = min_norm_direction(np.array([-1.0, 0.0]), np.array([0.0, 1.0]))
    assert lam == pytest.approx(0.5)
    np.testing.assert_allclose(d, [-0.5, -0.5])


def test_lambda_clamped_at_endpoints():
    # -d_prev = (2,0), g = (1,0): g itself is closest, lam = 0
    d, lam = min_norm_direction(np.array([-2.0, 0.0]), np.array([1.0, 0.0]))
    assert lam == 0.0
    np.testing.assert_allclose(d, [-1.0, 0.0])
    # -d_prev = (1,0), g = (3,0): -d_prev is closest, lam = 1
    d, lam = min_norm_direction(np.array([-1.0, 0.0]), np.array([3.0, 0.0]))
    assert lam == 1.0
    np.testing.assert_allclose(d, [-1.0, 0.0])


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        min_norm_direction(np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError):
        min_norm_direction(np.array([np.nan]), np.array([1.0]))


vec = st.integers(1, 20).flatmap(lambda n: st.tuples(
    arrays(np.float64, n, elements=st.floats(-1e3, 1e3)),
    arrays(np.float64, n, elements=st.floats(-1e3, 1e3))))


@settings(max_examples=200, deadline=None)
@given(vec, st.floats(0.0, 1.0))
def test_min_norm_property(pair, lam_other):
    d_prev, g = pair
    d, lam = min_norm_direction(d_prev, g)
    assert 0.0 <= lam <= 1.0
    nd = np.linalg.norm(d)
    scale = 1.0 + np.linalg.norm(d_prev) + np.linalg.norm(g)
    assert nd <= min(np.linalg.norm(d_prev), np.linalg.norm(g)) + 1e-12 * scale
    other = lam_other * (-d_prev) + (1 - lam_other) * g
    assert nd <= np.linalg.norm(other) + 1e-9 * scale


def test_pad():
    np.testing.assert_array_equal(pad([1.0, 2.0], 2), [1.0, 2.0])
    np.testing.assert_array_equal(pad([1.0, 2.0], 4), [1.0, 2.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        pad([1.0, 2.0], 1)


@given(arrays(np.float64, st.integers(0, 10), elements=st.floats(-1e6, 1e6)), st.integers(0, 10))
def test_pad_preserves_norm(v, extra):
    padded = pad(v, v.shape[0] + extra)
    np.testing.assert_array_equal(padded[:v.shape[0]], v)
    assert not padded[v.shape[0]:].any()
    assert np.linalg.norm(padded) == pytest.approx(np.linalg.norm(v), rel=1e-15, abs=0)
