import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scsvm.dataset import (DataError, Dataset, SampleStream, Standardizer, ValidationSampler,
                           load, split, standardize)


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_csv_label_remap(tmp_path):
    p = _write(tmp_path, "a.csv", "1.0,2.0,0\n3.0,4.0,1\n5.0,6.0,1\n")
    d = load(p, label_map={"0": -1, "1": 1})
    np.testing.assert_array_equal(d.labels, [-1, 1, 1])
    np.testing.assert_array_equal(d.features, [[1, 2], [3, 4], [5, 6]])
    # default mapping sends the numerically smaller label to -1
    np.testing.assert_array_equal(load(p).labels, [-1, 1, 1])


def test_csv_header_and_named_label(tmp_path):
    p = _write(tmp_path, "h.csv", "id,x,y,cls\n7,1.5,2.5,B\n8,0.5,1.0,M\n")
    d = load(p, label_column="cls", drop_columns=["id"])
    assert d.n_features == 2
    np.testing.assert_array_equal(d.labels, [-1, 1])
    assert d.label_names == ("B", "M")


def test_numeric_labels_sort_by_value(tmp_path):
    p = _write(tmp_path, "n.csv", "0.1,+1\n0.2,-1\n")
    np.testing.assert_array_equal(load(p).labels, [1, -1])


def test_sparse_format(tmp_path):
    p = _write(tmp_path, "s.txt", "+1 1:0.5 3:2.0\n-1 2:1\n")
    d = load(p, "sparse-index-value", n_features=3)
    np.testing.assert_array_equal(d.features, [[0.5, 0.0, 2.0], [0.0, 1.0, 0.0]])
    np.testing.assert_array_equal(d.labels, [1, -1])


@pytest.mark.parametrize("text,fmt,needle", [
    ("1,2,0\n3,0\n", "csv", ":2:"),
    ("1,2,0\n3,x,1\n4,5,0\n", "csv", ":2:"),
    ("+1 1:0.5\n-1 0:1\n", "sparse", ":2:"),
    ("+1 1:abc\n", "sparse", ":1:"),
])
def test_malformed_rows_report_line(tmp_path, text, fmt, needle):
    p = _write(tmp_path, "bad.txt", text)
    with pytest.raises(DataError, match=needle):
        load(p, fmt)


def test_load_errors(tmp_path):
    with pytest.raises(DataError, match="empty"):
        load(_write(tmp_path, "e.csv", "\n\n"))
    with pytest.raises(DataError, match="classes"):
        load(_write(tmp_path, "c.csv", "1,a\n2,b\n3,c\n"))
    with pytest.raises(DataError, match="outside"):
        load(_write(tmp_path, "m.csv", "1,0\n2,2\n"), label_map={"0": -1, "1": 1})
    with pytest.raises(DataError, match="no such file"):
        load(tmp_path / "missing.csv")
    with pytest.raises(DataError, match="format"):
        load(_write(tmp_path, "f.csv", "1,0\n"), "xlsx")


def test_dataset_invariants():
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), [1, 0], [0, 1])
    with pytest.raises(DataError):
        Dataset(np.array([[np.inf], [0.0]]), [1, -1], [0, 1])
    d = Dataset(np.zeros((2, 1)), [1, -1], [0, 1])
    with pytest.raises(ValueError):
        d.features[0, 0] = 1.0


def _toy(m):
    rng = np.random.default_rng(0)
    return Dataset(rng.standard_normal((m, 3)), np.where(np.arange(m) % 2, 1.0, -1.0),
                   np.arange(m))


def test_split_sizes_and_determinism():
    d = _toy(10)
    tr, te = split(d, 0.3, seed=4)
    assert (tr.n_samples, te.n_samples) == (7, 3)
    tr2, te2 = split(d, 0.3, seed=4)
    np.testing.assert_array_equal(tr.ids, tr2.ids)
    np.testing.assert_array_equal(te.ids, te2.ids)
    assert set(tr.ids).isdisjoint(te.ids) and set(tr.ids) | set(te.ids) == set(range(10))
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            split(d, bad, 0)


def test_split_seeds_differ():
    d = _toy(100)
    a = split(d, 0.3, 0)[1].ids
    b = split(d, 0.3, 1)[1].ids
    assert set(a) != set(b)


def test_standardize_invariants():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((50, 4)) * [1, 10, 1e-3, 0] + [5, -2, 0, 7]
    d = Dataset(X, np.where(np.arange(50) % 2, 1.0, -1.0), np.arange(50))
    (z,) = standardize(d)
    Z = z.features
    assert np.all(np.abs(Z.mean(axis=0)) < 1e-9)
    np.testing.assert_allclose(Z[:, :3].std(axis=0), 1.0, atol=1e-9)
    assert not Z[:, 3].any()
    # other splits use the training statistics
    st_ = Standardizer.fit(d)
    np.testing.assert_array_equal(st_.apply(d).features, Z)


def test_sample_stream():
    s = SampleStream(np.arange(10), seed=1)
    a = s.draw_next(4)
    b = s.draw_next(4)
    c = s.draw_next(4)
    assert (len(a), len(b), len(c)) == (4, 4, 2)
    assert s.exhausted and s.draw_next(3).size == 0
    assert sorted(np.concatenate([a, b, c])) == list(range(10))
    with pytest.raises(ValueError):
        s.draw_next(0)
    again = SampleStream(np.arange(10), seed=1)
    np.testing.assert_array_equal(again.draw_next(4), a)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 60), st.lists(st.integers(1, 15), max_size=10), st.integers(0, 2**32 - 1))
def test_stream_partition(m, counts, seed):
    s = SampleStream(np.arange(m), seed)
    for c in counts:
        s.draw_next(c)
        drawn, rem = set(s.drawn), set(s.remaining)
        assert drawn.isdisjoint(rem) and drawn | rem == set(range(m))
        assert len(drawn) == len(s.drawn)


def test_validation_sampler():
    v = ValidationSampler(np.arange(20), seed=0)
    a = v.draw(5)
    assert len(set(a)) == 5
    assert len(v.draw(50)) == 20
    with pytest.raises(ValueError):
        v.draw(0)
