import math

import numpy as np
import pytest

from scsvm.kernel import (GrowingKernel, KernelCapError, default_gamma, load_dump, rbf,
                          rbf_matrix)


def test_rbf_values():
    assert rbf([0, 0], [1, 0], 1.0) == pytest.approx(math.exp(-1))
    assert rbf([1, 2], [1, 2], 3.0) == 1.0
    assert rbf([0], [2], 0.5) == pytest.approx(math.exp(-2))
    with pytest.raises(ValueError):
        rbf([0], [0, 1], 1.0)
    with pytest.raises(ValueError):
        rbf([0], [1], 0.0)


def test_rbf_matrix_properties(rng):
    X = rng.standard_normal((30, 4))
    K = rbf_matrix(X, X, 0.7)
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_array_equal(np.diag(K), 1.0)
    assert np.all(np.linalg.eigvalsh(K) > -1e-10)
    # entries do not depend on batching
    np.testing.assert_array_equal(rbf_matrix(X[:7], X, 0.7), K[:7])
    np.testing.assert_array_equal(rbf_matrix(X, X[[3, 11]], 0.7), K[:, [3, 11]])
    assert K[2, 5] == pytest.approx(rbf(X[2], X[5], 0.7), rel=1e-14)


def test_default_gamma():
    X = np.array([[0.0, 0.0], [2.0, 2.0]])
    assert default_gamma(X) == pytest.approx(1.0 / (2 * 1.0))
    assert default_gamma(np.ones((3, 4))) == 0.25


def test_growing_kernel_matches_rebuild(rng):
    X = rng.standard_normal((40, 3))
    k = GrowingKernel(X, 0.5)
    order = rng.permutation(40)
    k.extend(order[:5]).extend(order[5:6]).extend(order[6:25])
    np.testing.assert_array_equal(k.gram, rbf_matrix(X[order[:25]], X[order[:25]], 0.5))
    np.testing.assert_array_equal(k.active, order[:25])
    with pytest.raises(ValueError):
        k.gram[0, 0] = 2.0


def test_growth_keeps_old_entries(rng):
    X = rng.standard_normal((20, 2))
    k = GrowingKernel(X, 1.0).extend([0, 1, 2])
    before = k.gram.copy()
    k.extend([5, 6])
    np.testing.assert_array_equal(k.gram[:3, :3], before)


def test_extend_errors(rng):
    X = rng.standard_normal((10, 2))
    k = GrowingKernel(X, 1.0, cap=4).extend([0, 1])
    with pytest.raises(ValueError):
        k.extend([1, 2])
    with pytest.raises(ValueError):
        k.extend([3, 3])
    with pytest.raises(IndexError):
        k.extend([10])
    with pytest.raises(KernelCapError):
        k.extend([2, 3, 4])
    assert k.size == 2
    k.extend([])
    assert k.size == 2


def test_cross_rows_tracked_and_untracked_agree(rng):
    X = rng.standard_normal((25, 3))
    a = GrowingKernel(X, 0.3)
    b = GrowingKernel(X, 0.3, track_rows=True)
    for chunk in ([4, 9], [0], [13, 2, 21]):
        a.extend(chunk)
        b.extend(chunk)
    np.testing.assert_array_equal(a.gram, b.gram)
    q = [1, 4, 24]
    np.testing.assert_array_equal(a.cross_rows(q), b.cross_rows(q))
    Y = rng.standard_normal((4, 3))
    np.testing.assert_array_equal(a.cross_rows(range(4), Y), rbf_matrix(Y, X[a.active], 0.3))
    with pytest.raises(IndexError):
        a.cross_rows([25])


def test_custom_kernel_fn(rng):
    X = rng.standard_normal((6, 2))
    k = GrowingKernel(X, 1.0, kernel_fn=lambda A, B: A @ B.T).extend([0, 3]).extend([5])
    idx = [0, 3, 5]
    np.testing.assert_allclose(k.gram, X[idx] @ X[idx].T)


def test_dump_roundtrip(tmp_path, rng):
    X = rng.standard_normal((8, 2))
    k = GrowingKernel(X, 0.9).extend([1, 4, 6])
    path = tmp_path / "k.bin"
    k.dump(path)
    raw = path.read_bytes()
    assert len(raw) == 16 + 9 * 8
    assert raw[:8] == (3).to_bytes(8, "little")
    gram, gamma = load_dump(path)
    assert gamma == 0.9
    np.testing.assert_array_equal(gram, k.gram)
