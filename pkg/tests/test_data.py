import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from complasso.data import (
    BadFractions,
    ConstantColumn,
    MissingColumn,
    ParseError,
    RaggedRow,
    RawDataset,
    load_csv,
    sample_covariance,
    split_indices,
    standardize,
)


def test_standardize_hand_example():
    raw = RawDataset(np.array([[1.0], [2.0], [3.0]]), np.array([5.0, 5.0, 5.0]))
    d = standardize(raw)
    # mean 2, scale sqrt(2/3) with the 1/n convention
    assert d.col_scales[0] == pytest.approx(np.sqrt(2 / 3))
    np.testing.assert_allclose(d.X[:, 0], [-np.sqrt(1.5), 0, np.sqrt(1.5)], atol=1e-14)
    np.testing.assert_array_equal(d.y, 0.0)
    assert d.y_mean == 5.0


def test_constant_column_raises():
    raw = RawDataset(np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]]), np.zeros(3))
    with pytest.raises(ConstantColumn) as ei:
        standardize(raw)
    assert ei.value.j == 0


def test_invalid_raw():
    with pytest.raises(ValueError):
        RawDataset(np.array([[np.nan, 1.0], [1.0, 2.0]]), np.zeros(2))
    with pytest.raises(ValueError):
        RawDataset(np.ones((1, 2)), np.zeros(1))


def _design(seed, n=30, p=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) * rng.uniform(0.5, 4, p) + rng.normal(size=p) * 10
    return RawDataset(X, rng.normal(size=n) + 3)


@given(st.integers(0, 10_000))
def test_standardized_invariants(seed):
    d = standardize(_design(seed))
    assert np.all(np.abs(d.X.mean(axis=0)) < 1e-10)
    np.testing.assert_allclose((d.X ** 2).mean(axis=0), 1.0, atol=1e-10)
    assert abs(d.y.mean()) < 1e-10
    # idempotent
    d2 = standardize(d.raw().__class__(d.X, d.y))
    np.testing.assert_allclose(d2.X, d.X, atol=1e-10)
    np.testing.assert_allclose(d2.y, d.y, atol=1e-10)


@given(st.integers(0, 10_000))
def test_covariance_is_correlation(seed):
    d = standardize(_design(seed))
    cov = sample_covariance(d)
    S = cov.S
    np.testing.assert_allclose(np.diag(S), 1.0, atol=1e-10)
    assert np.all(np.abs(S) <= 1 + 1e-10)
    assert np.array_equal(S, S.T)
    cov.check()


@given(st.integers(0, 10_000), arrays(float, 5, elements=st.floats(-5, 5)))
def test_raw_prediction_identity(seed, beta):
    raw = _design(seed)
    d = standardize(raw)
    slope, intercept = d.transform.raw_coef(beta)
    np.testing.assert_allclose(raw.X @ slope + intercept, d.X @ beta + d.y_mean, atol=1e-10)
    np.testing.assert_allclose(d.predict_raw(beta), d.X @ beta + d.y_mean, atol=1e-12)


def test_covariance_examples():
    u = np.array([-1.0, 1.0, -1.0, 1.0])
    v = np.array([-1.0, -1.0, 1.0, 1.0])  # orthogonal to u, both centered
    for col2, expected in [(u, 1.0), (-u, -1.0), (v, 0.0)]:
        d = standardize(RawDataset(np.column_stack([u, col2]), np.arange(4.0)))
        assert sample_covariance(d).S[0, 1] == pytest.approx(expected, abs=1e-15)


def test_transform_applies_training_statistics():
    raw = _design(1)
    tr = standardize(raw.subset(np.arange(20)))
    te = standardize(raw.subset(np.arange(20, 30)), tr.transform)
    np.testing.assert_allclose(te.X, (raw.X[20:] - tr.col_means) / tr.col_scales)


def test_dataset_json():
    d = standardize(_design(3))
    doc = json.loads(d.to_json())
    assert doc["n"] == 30 and doc["p"] == 5
    np.testing.assert_array_equal(doc["col_means"], d.col_means)
    assert doc["y_mean"] == d.y_mean


def test_load_csv(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("a,b,y\n1,2,3\n4,5,6\n7,8,10\n")
    raw = load_csv(f, "y")
    assert (raw.n, raw.p) == (3, 2)
    assert raw.feature_names == ["a", "b"]
    np.testing.assert_array_equal(raw.y, [3, 6, 10])
    np.testing.assert_array_equal(raw.X[:, 1], [2, 5, 8])


def test_load_csv_without_header(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("1,2,3\n4,5,6\n7,8,10\n")
    raw = load_csv(f, 0)
    assert raw.feature_names is None
    np.testing.assert_array_equal(raw.y, [1, 4, 7])


def test_load_csv_errors(tmp_path):
    f = tmp_path / "nan.csv"
    f.write_text("a,b,y\n1,NaN,3\n4,5,6\n")
    with pytest.raises(ParseError):
        load_csv(f, "y")
    f.write_text("a,b,y\n1,x,3\n4,5,6\n")
    with pytest.raises(ParseError) as ei:
        load_csv(f, "y")
    assert (ei.value.row, ei.value.col) == (1, 1)
    f.write_text("a,b,y\n1,2,3\n4,5\n")
    with pytest.raises(RaggedRow):
        load_csv(f, "y")
    f.write_text("a,b,c\n1,2,3\n4,5,6\n")
    with pytest.raises(MissingColumn):
        load_csv(f, "y")


def test_split_counts():
    s = split_indices(240, (20, 20, 200), seed=7)
    assert (len(s.train), len(s.validation), len(s.test)) == (20, 20, 200)
    allidx = np.concatenate([s.train, s.validation, s.test])
    assert len(set(allidx.tolist())) == 240
    s2 = split_indices(240, (20, 20, 200), seed=7)
    for a, b in zip((s.train, s.validation, s.test), (s2.train, s2.validation, s2.test)):
        np.testing.assert_array_equal(a, b)


def test_split_all_train_and_fractions():
    s = split_indices(10, (10, 0, 0), seed=0)
    np.testing.assert_array_equal(s.train, np.arange(10))
    assert s.validation.size == 0 and s.test.size == 0
    s = split_indices(100, (0.5, 0.25), seed=1)
    assert (len(s.train), len(s.validation), len(s.test)) == (50, 25, 0)
    with pytest.raises(BadFractions):
        split_indices(10, (8, 5, 0), seed=0)
    with pytest.raises(BadFractions):
        split_indices(10, (0.7, 0.5), seed=0)
