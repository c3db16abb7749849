import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from complasso.cluster import Partition
from complasso.data import DimensionMismatch, RawDataset, standardize
from complasso.pipeline import (
    EmptyGrid,
    Holdout,
    KFold,
    NegativeWeight,
    SelectionGrid,
    UnknownEstimator,
    component_lasso_fit,
    default_k_values,
    fit_estimator,
    load_model,
    objective_J,
    predict,
    save_model,
    select_model,
)
from complasso.simgen import SimSpec, generate
from complasso.solve import EnetConfig, enet_path


def make_data(seed=0, n=40, p=6, rho=0.6):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) + rho * rng.normal(size=(n, 1))
    beta = np.zeros(p)
    beta[:2] = (2.0, -1.0)
    y = X @ beta + rng.normal(size=n)
    names = [f"v{j}" for j in range(p)]
    return standardize(RawDataset(X, y, names))


def block_orthogonal(seed, n, sizes):
    """Standardized design whose blocks are exactly orthogonal."""
    rng = np.random.default_rng(seed)
    p = sum(sizes)
    Q, _ = np.linalg.qr(np.column_stack([np.ones(n), rng.normal(size=(n, p))]))
    Q = Q[:, 1:]  # orthogonal to the intercept, so columns stay centered
    cols, start = [], 0
    for m in sizes:
        basis = Q[:, start:start + m]
        mix = rng.normal(size=(m, m)) + 2.0 * np.ones((m, m))
        cols.append(basis @ mix)
        start += m
    X = np.hstack(cols)
    X /= np.sqrt((X ** 2).mean(axis=0))
    y = X @ rng.normal(size=p) + rng.normal(size=n)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    return X, y - y.mean(), Partition(labels)


def test_default_k_values():
    assert default_k_values(8) == tuple(range(1, 9))
    ks = default_k_values(1279)
    assert ks[0] == 1 and ks[-1] == 50 and len(ks) == 10


def test_k1_weight_is_clamped_rescale():
    d = make_data(1)
    lam = 5.0
    m = component_lasso_fit(d, Partition.single_block(d.p), 0.5, lam)
    b = enet_path(d.X, d.y, EnetConfig(0.5, np.array([lam]))).betas[0]
    yh = d.X @ b
    assert m.weights.c[0] == pytest.approx(max(0.0, yh @ d.y / (yh @ yh)), rel=1e-10)


@settings(max_examples=100)
@given(st.integers(0, 2**20), st.floats(0.05, 0.9), st.sampled_from([1.0, 0.5]))
def test_block_orthogonal_pre_nnls_equals_full_fit(seed, frac, alpha):
    rng = np.random.default_rng(seed)
    sizes = list(rng.integers(1, 5, size=rng.integers(2, 4)))
    X, y, part = block_orthogonal(seed, 30, sizes)
    lam = frac * np.abs(X.T @ y).max() / alpha
    full = enet_path(X, y, EnetConfig(alpha, np.array([lam]))).betas[0]
    d = standardize(RawDataset(X, y))
    m = component_lasso_fit(d, part, alpha, lam)
    assert np.abs(m.pre_nnls - full).max() < 1e-6


def test_noise_component_gets_zero_weight():
    rng = np.random.default_rng(4)
    n = 50
    X = rng.normal(size=(n, 4))
    y = 3 * X[:, 0] + rng.normal(size=n)
    d = standardize(RawDataset(X, y))
    lam = 0.9 * np.abs(d.X.T @ d.y)[0]
    part = Partition(np.array([0, 0, 1, 1]))
    m = component_lasso_fit(d, part, 1.0, lam)
    assert np.all(m.per_component[1] == 0)
    assert m.weights.c[1] == 0.0


def test_combined_coefficients_are_weighted_scatter():
    d = make_data(2, p=8)
    part = Partition(np.array([0, 0, 1, 1, 2, 2, 2, 3]))
    m = component_lasso_fit(d, part, 0.5, 2.0)
    expect = np.zeros(d.p)
    for k, idx in enumerate(part.members()):
        expect[idx] = m.weights.c[k] * m.per_component[k]
    assert np.abs(m.beta_hat - expect).max() <= 1e-12
    assert np.all(m.weights.c >= 0)


def test_nnls_never_worse_than_unit_weights():
    d = make_data(3, p=8)
    part = Partition(np.array([0, 0, 0, 1, 1, 2, 2, 2]))
    m = component_lasso_fit(d, part, 1.0, 3.0)
    r_nnls = d.y - d.X @ m.beta_hat
    r_one = d.y - d.X @ m.pre_nnls
    assert r_nnls @ r_nnls <= r_one @ r_one + 1e-10


def test_objective_j_zero_beta_counts_every_component():
    d = make_data(5)
    part = Partition(np.array([0, 0, 1, 1, 2, 2]))
    J = objective_J(d, part, np.zeros(d.p), np.ones(3), 0.5, 1.0)
    assert J == pytest.approx(3 * 0.5 * d.y @ d.y, rel=1e-12)


def test_objective_j_single_block_unpenalized(rng):
    d = make_data(6)
    b = rng.normal(size=d.p)
    J = objective_J(d, Partition.single_block(d.p), b, [1.0], 0.3, 0.0)
    r = d.y - d.X @ b
    assert J == pytest.approx(0.5 * r @ r, rel=1e-12)


def test_objective_j_rejects_negative_weight():
    d = make_data(7)
    with pytest.raises(NegativeWeight):
        objective_J(d, Partition.single_block(d.p), np.zeros(d.p), [-1.0], 1.0, 1.0)


def test_objective_j_minimized_componentwise_in_c():
    # each summand only involves its own c_k, so the exact minimizer in c is
    # the per-component scalar regression clamped at zero
    d = make_data(8)
    part = Partition(np.array([0, 0, 0, 1, 1, 1]))
    m = component_lasso_fit(d, part, 1.0, 2.0)
    b = m.pre_nnls
    c_star = []
    for idx in part.members():
        yh = d.X[:, idx] @ b[idx]
        c_star.append(max(0.0, yh @ d.y / (yh @ yh)) if yh @ yh > 0 else 0.0)
    J_star = objective_J(d, part, b, c_star, 1.0, 2.0)
    for c in ([1.0, 1.0], m.weights.c, [0.5, 2.0]):
        assert J_star <= objective_J(d, part, b, c, 1.0, 2.0) + 1e-9


def test_iterate_once_keeps_nonnegative_weights():
    d = make_data(9, p=8)
    part = Partition(np.array([0, 0, 1, 1, 2, 2, 3, 3]))
    m = component_lasso_fit(d, part, 0.5, 1.0, iterate_once=True)
    assert np.all(m.weights.c >= 0)
    assert m.beta_hat.shape == (d.p,)


def test_partition_size_mismatch():
    d = make_data(10)
    with pytest.raises(DimensionMismatch):
        component_lasso_fit(d, Partition.single_block(d.p + 1), 1.0, 1.0)


def test_lasso_at_zero_matches_hybrid():
    d = make_data(11, n=60)
    a = fit_estimator("lasso", d, {"lambda": 0.0}).beta_hat
    b = fit_estimator("lasso_ols_hybrid", d, {"lambda": 0.0}).beta_hat
    assert np.abs(a - b).max() < 1e-5


def test_rescaled_lasso_scalar():
    d = make_data(12)
    lam = 5.0
    base = fit_estimator("lasso", d, {"lambda": lam}).beta_hat
    resc = fit_estimator("rescaled_lasso", d, {"lambda": lam}).beta_hat
    yh = d.X @ base
    s = yh @ d.y / (yh @ yh)
    assert np.allclose(resc, s * base, rtol=1e-12, atol=1e-14)


def test_rescale_is_one_when_interpolating():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(30, 3))
    y = X @ np.array([1.0, 2.0, -1.0])
    d = standardize(RawDataset(X, y))
    a = fit_estimator("lasso", d, {"lambda": 0.0}).beta_hat
    b = fit_estimator("rescaled_lasso", d, {"lambda": 0.0}).beta_hat
    assert np.allclose(a, b, rtol=1e-6)


def test_component_k1_matches_enet_when_rescale_positive():
    d = make_data(14)
    lam = 3.0
    cl = fit_estimator("component_lasso", d, {"K": 1, "alpha": 1.0, "lambda": lam})
    en = fit_estimator("enet", d, {"alpha": 1.0, "lambda": lam})
    assert cl.component.weights.c[0] > 0
    assert np.allclose(cl.beta_hat, en.beta_hat, rtol=1e-10, atol=1e-14)


def test_ridge_closed_form():
    d = make_data(15)
    r = fit_estimator("ridge", d, {"lambda2": 2.0}).beta_hat
    expect = np.linalg.solve(d.X.T @ d.X + 2.0 * np.eye(d.p), d.X.T @ d.y)
    assert np.allclose(r, expect, rtol=1e-8)


def test_unknown_estimator():
    d = make_data(16)
    with pytest.raises(UnknownEstimator):
        fit_estimator("lars", d, {"lambda": 1.0})
    with pytest.raises(UnknownEstimator):
        select_model(d, SelectionGrid(), KFold(), "lars")


def test_empty_grid():
    d = make_data(17)
    with pytest.raises(EmptyGrid):
        select_model(d, SelectionGrid(alpha_values=()), KFold(), "enet")


def holdout_setup(seed=0):
    raw, split, _, _ = generate(SimSpec.named("ex2a", seed=seed))
    d = standardize(raw.subset(split.train))
    return raw, split, d, Holdout.from_split(raw, split)


def test_one_cell_grid_returns_best_lambda():
    raw, split, d, hold = holdout_setup()
    rep = select_model(d, SelectionGrid((2,), (0.5,)), hold, "component_lasso")
    assert rep.params["K"] == 2 and rep.params["alpha"] == 0.5
    # the chosen lambda beats every other lambda on the validation set
    from complasso.solve import lambda_grid

    Xv = d.transform.transform_X(hold.X)
    yv = hold.y - d.y_mean
    best = np.inf
    for lam in lambda_grid(d.X, d.y, 0.5):
        b = fit_estimator("component_lasso", d, {"K": 2, "alpha": 0.5, "lambda": lam}).beta_hat
        best = min(best, np.mean((yv - Xv @ b) ** 2))
    assert rep.validation_mse == pytest.approx(best, rel=1e-9)


def test_duplicate_grid_entries_change_nothing():
    raw, split, d, hold = holdout_setup(1)
    a = select_model(d, SelectionGrid((1, 2, 3), (0.5, 1.0)), hold)
    b = select_model(d, SelectionGrid((3, 1, 2, 2, 1), (1.0, 0.5, 0.5)), hold)
    assert a.params == b.params and np.array_equal(a.beta_hat, b.beta_hat)


def test_selection_is_deterministic():
    d = make_data(18, n=50)
    a = select_model(d, SelectionGrid((1, 2, 3)), KFold(5, seed=4))
    b = select_model(d, SelectionGrid((1, 2, 3)), KFold(5, seed=4))
    assert a.params == b.params and np.array_equal(a.beta_hat, b.beta_hat)


@pytest.mark.parametrize("est", ["lasso", "rescaled_lasso", "lasso_ols_hybrid",
                                 "ridge", "naive_enet", "enet", "component_lasso"])
def test_every_estimator_selects(est):
    raw, split, d, hold = holdout_setup(2)
    rep = select_model(d, SelectionGrid((1, 2)), hold, est)
    assert np.isfinite(rep.validation_mse)
    assert rep.n_nonzero == np.count_nonzero(rep.beta_hat)


def test_predict_reproduces_fitted_values():
    d = make_data(19)
    rep = fit_estimator("enet", d, {"alpha": 0.5, "lambda": 1.0})
    raw = d.raw()
    fitted = d.X @ rep.beta_hat + d.y_mean
    assert np.abs(predict(rep, raw.X) - fitted).max() < 1e-10


def test_predict_zero_model_is_constant():
    d = make_data(20)
    lam = 10 * np.abs(d.X.T @ d.y).max()
    rep = fit_estimator("lasso", d, {"lambda": lam})
    assert rep.n_nonzero == 0
    assert np.all(predict(rep, d.raw().X) == d.y_mean)


def test_predict_aligns_by_name():
    d = make_data(21)
    rep = fit_estimator("enet", d, {"alpha": 0.5, "lambda": 1.0})
    X = d.raw().X
    perm = np.array([3, 0, 5, 1, 4, 2])
    names = [d.feature_names[j] for j in perm]
    assert np.array_equal(predict(rep, X[:, perm], names), predict(rep, X))


def test_predict_dimension_mismatch():
    d = make_data(22)
    rep = fit_estimator("lasso", d, {"lambda": 1.0})
    with pytest.raises(DimensionMismatch):
        predict(rep, np.zeros((2, d.p + 1)))


def test_model_json_round_trip_bit_exact(tmp_path):
    raw, split, d, hold = holdout_setup(3)
    rep = select_model(d, SelectionGrid((1, 2, 4)), hold)
    save_model(rep, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    Xt = raw.X[split.test]
    assert np.array_equal(predict(rep, Xt), predict(back, Xt))
    assert back.params == rep.params
    assert np.array_equal(back.component.weights.c, rep.component.weights.c)


def test_kfold_restandardizes_each_fold():
    d = make_data(23, n=45)
    rep = select_model(d, SelectionGrid((1,), (1.0,)), KFold(3, 0), "lasso")
    assert rep.validation_mse > 0
    with pytest.raises(ValueError):
        select_model(d, SelectionGrid(), KFold(1, 0), "lasso")
