import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import block_diag

from complasso.data import DimensionMismatch
from complasso.metrics import (
    EmptyTestSet,
    SingularGram,
    beta_mse,
    evaluate,
    irrepresentability,
    raw_covariance,
    support_rates,
    test_mse,
)


def test_beta_mse_zero_at_truth():
    b = np.array([1.0, -2.0, 0.5])
    assert beta_mse(b, b, np.eye(3)) == 0.0


def test_beta_mse_identity_form():
    assert beta_mse([1.0, 0.0], [0.0, 1.0], np.eye(2)) == pytest.approx(2.0)


def test_beta_mse_block_diagonal_sums(rng):
    A = rng.normal(size=(3, 3))
    B = rng.normal(size=(2, 2))
    A, B = A @ A.T, B @ B.T
    d = rng.normal(size=5)
    whole = beta_mse(d, np.zeros(5), block_diag(A, B))
    parts = d[:3] @ A @ d[:3] + d[3:] @ B @ d[3:]
    assert whole == pytest.approx(parts, rel=1e-12)


def test_beta_mse_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        beta_mse([1.0, 2.0], [0.0, 0.0], np.eye(3))


def test_beta_mse_equals_prediction_gap_on_test_set(rng):
    X = rng.normal(size=(40, 4)) + 3.0
    b, bh = rng.normal(size=4), rng.normal(size=4)
    Xc = X - X.mean(axis=0)
    gap = np.sum((Xc @ (b - bh)) ** 2) / X.shape[0]
    assert beta_mse(b, bh, raw_covariance(X)) == pytest.approx(gap, abs=1e-8)


def test_test_mse_examples():
    assert test_mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert test_mse([0.0, 0.0], [1.0, 1.0]) == 1.0


def test_test_mse_constant_predictor_is_variance(rng):
    y = rng.normal(size=30)
    assert test_mse(y, np.full(30, y.mean())) == pytest.approx(np.var(y), rel=1e-12)


def test_test_mse_empty():
    with pytest.raises(EmptyTestSet):
        test_mse([], [])


def test_support_rates_ridge_example1():
    truth = np.array([3, 1.5, 0, 0, 2, 0, 0, 0.0])
    fp, fn = support_rates(truth, np.full(8, 0.1))
    assert fp == 5 / 8 and fn == 0.0


def test_support_rates_exact_pattern():
    truth = np.array([3, 0, 2, 0.0])
    assert support_rates(truth, np.array([1.0, 0, 5, 0])) == (0.0, 0.0)


def test_support_rates_hand_count():
    fp, fn = support_rates([3.0, 0, 0, 0], [1.0, 1.0, 0, 0])
    assert fp == 0.5 and fn == 0.0


def test_support_rates_nothing_selected():
    fp, fn = support_rates([1.0, 0, 0], np.zeros(3))
    assert fp == 0.0 and fn == pytest.approx(1 / 3)


def test_support_threshold_ignores_roundoff():
    assert support_rates([1.0, 0.0], [1.0, 1e-12]) == (0.0, 0.0)


@given(st.floats(0.01, 100) | st.floats(-100, -0.01), st.integers(0, 2**16))
def test_support_rates_scale_invariant(s, seed):
    rng = np.random.default_rng(seed)
    truth = rng.normal(size=10) * (rng.random(10) < 0.4)
    bh = rng.normal(size=10) * (rng.random(10) < 0.5)
    assert support_rates(truth, bh) == support_rates(truth, s * bh)


def test_evaluate_fields(rng):
    X = rng.normal(size=(50, 3))
    b = np.array([1.0, 0.0, 2.0])
    y = X @ b
    ev = evaluate(b, b, X, y, y)
    assert ev.beta_mse == 0 and ev.test_mse == 0 and ev.fp_rate == 0 and ev.fn_rate == 0


def test_evaluate_with_training_covariance(rng):
    X = rng.normal(size=(50, 2))
    ev = evaluate([1.0, 0.0], [0.0, 0.0], X, np.zeros(50), np.zeros(50), S=np.eye(2))
    assert ev.beta_mse == 1.0


def test_irrepresentability_orthogonal_is_zero():
    Q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(20, 4)))
    assert irrepresentability(Q, [0, 1], [1.0, -1.0]) == pytest.approx(0.0, abs=1e-12)


def test_irrepresentability_duplicate_column_is_one(rng):
    x = rng.normal(size=25)
    X = np.column_stack([x, x, rng.normal(size=25)])
    # column 1 duplicates the signal; column 2 is unrelated noise
    X[:, 2] -= X[:, 2] @ x / (x @ x) * x
    assert irrepresentability(X, [0], [1.0]) == pytest.approx(1.0, rel=1e-12)


def test_irrepresentability_block_max(rng):
    def block(n, m):
        z = rng.normal(size=(n, 1))
        return z + 0.7 * rng.normal(size=(n, m))

    n = 60
    B1, B2 = block(n, 4), block(n, 3)
    # make the blocks exactly orthogonal
    B1 -= B1.mean(axis=0)
    B2 -= B2.mean(axis=0)
    B2 -= B1 @ np.linalg.lstsq(B1, B2, rcond=None)[0]
    X = np.hstack([B1, B2])
    S, sign = [0, 1, 4], np.array([1.0, -1.0, 1.0])
    whole = irrepresentability(X, S, sign)
    # per block: signal {0,1} in block 1, {4} in block 2
    v1 = irrepresentability(B1, [0, 1], sign[:2])
    v2 = irrepresentability(B2, [0], sign[2:])
    assert whole == pytest.approx(max(v1, v2), rel=1e-8)


def test_irrepresentability_signal_component_only(rng):
    n = 50
    B1 = rng.normal(size=(n, 4)) + rng.normal(size=(n, 1))
    B2 = rng.normal(size=(n, 3))
    B1 -= B1.mean(axis=0)
    B2 -= B2.mean(axis=0)
    B2 -= B1 @ np.linalg.lstsq(B1, B2, rcond=None)[0]
    X = np.hstack([B1, B2])
    assert irrepresentability(X, [0, 2], [1.0, 1.0]) == pytest.approx(
        irrepresentability(B1, [0, 2], [1.0, 1.0]), rel=1e-8
    )


def test_irrepresentability_singular():
    x = np.arange(6.0)
    X = np.column_stack([x, 2 * x, np.ones(6)])
    with pytest.raises(SingularGram):
        irrepresentability(X, [0, 1], [1.0, 1.0])
