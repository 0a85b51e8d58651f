import numpy as np
import pytest

from scsvm.kernel import GrowingKernel, rbf_matrix
from scsvm.objective import (SampledObjective, decision_function, eval_full, eval_validation)

from conftest import random_instance


def test_zero_alpha():
    obj, _, w, _ = random_instance(np.random.default_rng(1), m=7)
    p = obj.parts(np.zeros(7))
    assert (p.quadratic, p.hinge, p.value) == (0.0, 1.0, 1.0)
    np.testing.assert_allclose(obj.subgradient(np.zeros(7)), -(obj.gram @ w) / 7, atol=1e-15)


def test_single_point_hand_value():
    obj = SampledObjective([[1.0]], [1.0])
    assert obj.eval([2.0]) == 2.0
    np.testing.assert_array_equal(obj.subgradient([2.0]), [2.0])


def test_duplicating_samples_keeps_value(rng):
    obj, X, w, g = random_instance(rng, m=6)
    a = rng.standard_normal(6) * 0.3
    X2, w2 = np.vstack([X, X]), np.concatenate([w, w])
    big = SampledObjective(rbf_matrix(X2, X2, g), w2)
    # the duplicated coefficient vector halves each weight so beta is unchanged
    b = np.concatenate([a, a]) / 2
    assert big.eval(b) == pytest.approx(obj.eval(a), rel=1e-12)


def test_smooth_region_gradient():
    Q = np.array([[1.0, 0.2], [0.2, 1.0]])
    obj = SampledObjective(Q, [1.0, -1.0])
    a = np.array([3.0, -3.0])
    assert np.all(obj.margins(a) > 1)
    np.testing.assert_array_equal(obj.subgradient(a), Q @ a)


def test_kink_rule_uses_zero():
    obj = SampledObjective([[1.0]], [1.0])
    # margin exactly 1: hinge contributes nothing
    np.testing.assert_array_equal(obj.subgradient([1.0]), [1.0])
    np.testing.assert_array_equal(obj.subgradient([0.5]), [-0.5])


def test_errors():
    obj = SampledObjective(np.eye(2), [1.0, -1.0])
    with pytest.raises(ValueError):
        obj.eval([1.0])
    with pytest.raises(ValueError):
        obj.eval([np.nan, 0.0])
    with pytest.raises(ValueError):
        SampledObjective(np.eye(3), [1.0, -1.0])
    with pytest.raises(ValueError):
        eval_validation(obj, np.zeros((3, 2)), [1.0, 1.0], [0.0, 0.0])


def test_subgradient_inequality_and_convexity(rng):
    for _ in range(20):
        obj, *_ = random_instance(rng)
        n = obj.dim
        a = rng.standard_normal(n)
        fa, ga = obj.eval(a), obj.subgradient(a)
        for _ in range(100):
            y = a + rng.standard_normal(n) * rng.choice([1e-3, 0.1, 1.0])
            assert obj.eval(y) >= fa + ga @ (y - a) - 1e-9 * max(1.0, abs(fa))
        b = rng.standard_normal(n)
        lam = rng.random()
        assert obj.eval(lam * a + (1 - lam) * b) <= lam * fa + (1 - lam) * obj.eval(b) + 1e-9


def test_decomposition_is_exact(rng):
    obj, *_ = random_instance(rng, m=25)
    a = rng.standard_normal(25)
    p = obj.parts(a)
    assert p.quadratic + p.hinge == obj.eval(a)
    v, g = obj.value_and_subgradient(a)
    assert v == obj.eval(a)
    np.testing.assert_array_equal(g, obj.subgradient(a))


def test_values_columns(rng):
    obj, *_ = random_instance(rng, m=12)
    B = rng.standard_normal((12, 3))
    vals, quad, QB = obj.values(B)
    for j in range(3):
        assert vals[j] == pytest.approx(obj.eval(B[:, j]), rel=1e-13)
    np.testing.assert_allclose(QB, obj.gram @ B, rtol=1e-14)
    with pytest.raises(ValueError):
        obj.values(np.zeros(12))


def test_line_restriction_matches_direct(rng):
    for _ in range(50):
        obj, *_ = random_instance(rng)
        n = obj.dim
        x, d = rng.standard_normal(n) * 0.3, rng.standard_normal(n)
        line = obj.restrict(x, d)
        assert line.value0 == pytest.approx(obj.eval(x), abs=1e-12)
        for t in (1e-4, 0.01, 0.3, 2.0):
            v, s = line.value_and_slope(t)
            y = x + t * d
            assert v == pytest.approx(obj.eval(y), abs=1e-12)
            assert s == pytest.approx(float(obj.subgradient(y) @ d), abs=1e-11)


def test_validation_self_and_hand():
    Q = np.array([[1.0, 0.5, 0.1], [0.5, 1.0, 0.3], [0.1, 0.3, 1.0]])
    w = np.array([1.0, -1.0, 1.0])
    obj = SampledObjective(Q, w)
    a = np.array([0.4, -0.2, 0.7])
    assert eval_validation(obj, Q, w, a) == pytest.approx(obj.eval(a), abs=1e-12)
    cross = np.array([[0.2, 0.9, 0.4], [0.6, 0.1, 0.8]])
    wt = np.array([-1.0, 1.0])
    s = cross @ a
    hand = 0.5 * a @ Q @ a + (max(0, 1 - wt[0] * s[0]) + max(0, 1 - wt[1] * s[1])) / 2
    assert eval_validation(obj, cross, wt, a) == pytest.approx(hand, abs=1e-12)
    assert eval_validation(obj, cross, wt, np.zeros(3)) == 1.0


def test_eval_full_cases(rng):
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    w = np.array([1.0, -1.0, 1.0])
    g = 0.5
    assert eval_full(X, w, [0, 2], [0.0, 0.0], g) == 1.0
    # two active rows, three training rows, by hand
    a = np.array([0.6, 0.3])
    k = lambda i, j: np.exp(-g * np.sum((X[i] - X[j]) ** 2))
    quad = 0.5 * (a[0] ** 2 + a[1] ** 2 + 2 * a[0] * a[1] * k(0, 2))
    scores = [a[0] * k(i, 0) + a[1] * k(i, 2) for i in range(3)]
    hinge = sum(max(0.0, 1 - w[i] * scores[i]) for i in range(3)) / 3
    assert eval_full(X, w, [0, 2], a, g) == pytest.approx(quad + hinge, abs=1e-12)
    # all rows active: same as the sampled objective over everything
    obj = SampledObjective(rbf_matrix(X, X, g), w)
    b = rng.standard_normal(3)
    assert eval_full(X, w, [0, 1, 2], b, g) == pytest.approx(obj.eval(b), abs=1e-12)


def test_eval_full_equals_validation_over_train(rng):
    X = rng.standard_normal((30, 3))
    w = np.where(rng.random(30) < 0.5, -1.0, 1.0)
    k = GrowingKernel(X, 0.4).extend([3, 7, 11, 20, 25])
    obj = SampledObjective(k.gram, w[k.active])
    a = rng.standard_normal(5)
    v = eval_validation(obj, k.cross_rows(np.arange(30)), w, a)
    assert eval_full(X, w, k.active, a, 0.4) == pytest.approx(v, abs=1e-12)


def test_decision_function_chunks(rng):
    X = rng.standard_normal((50, 2))
    S = X[:4]
    a = np.array([0.5, 0.0, -1.0, 2.0])
    ref = rbf_matrix(X, S, 1.3) @ a
    np.testing.assert_allclose(decision_function(S, a, X, 1.3, chunk=7), ref, rtol=1e-13)
    assert not decision_function(S, np.zeros(4), X, 1.3).any()
