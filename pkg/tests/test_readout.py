import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evoke import oracles
from evoke.errors import ConvergenceError, DegenerateLabelsError
from evoke.readout import (ActivationTable, KernelSpec, LinearReadout, SvmModel, fit_pseudoinverse,
                           fit_svc, fit_svr, gaussian_kernel, gram_matrix, predict, predict_linear)


def random_problem(rng, n_max=8, dim=2):
    n = int(rng.integers(3, n_max + 1))
    X = rng.normal(size=(n, dim))
    labels = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    labels[:2] = (1.0, -1.0)
    return X, labels, rng.normal(size=n)


# --------------------------------------------------------------------------- kernel


def test_kernel_closed_forms():
    x = np.array([0.3, -1.2, 2.0])
    assert gaussian_kernel(x, x, 2.0) == 1.0
    y = x + np.array([2.0, 2.0, 0.0])  # squared distance 8
    assert gaussian_kernel(x, y, 2.0) == pytest.approx(math.exp(-1.0), abs=1e-12)
    assert gaussian_kernel(x, y, 2.0) == pytest.approx(0.367879, abs=1e-6)


def test_kernel_rejects_bad_args():
    with pytest.raises(ValueError):
        gaussian_kernel([1.0], [1.0, 2.0], 1.0)
    with pytest.raises(ValueError):
        gaussian_kernel([1.0], [1.0], 0.0)
    with pytest.raises(ValueError):
        KernelSpec(-1.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), sigma=st.floats(0.1, 10.0))
def test_kernel_symmetric_psd(seed, sigma):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(10, 4))
    K = gram_matrix(X, X, sigma)
    np.testing.assert_allclose(K, K.T, atol=0)
    assert np.all((K >= 0) & (K <= 1.0))
    assert np.linalg.eigvalsh(K).min() >= -1e-8
    assert gaussian_kernel(X[0], X[1], sigma) == gaussian_kernel(X[1], X[0], sigma)


# --------------------------------------------------------------------------- SVC


def test_two_point_classifier():
    # dual over (a1, a2) with a1 = a2 = a; objective a^2 (1 - K12) - 2a on [0, C]
    X = np.array([[-1.0], [1.0]])
    sigma, C = 100.0, 100.0
    k12 = math.exp(-4.0 / (2 * sigma ** 2))
    grid = np.linspace(0, C, 200001)
    best_a = grid[np.argmin(grid ** 2 * (1 - k12) - 2 * grid)]
    model = fit_svc(ActivationTable(X, [-1, 1]), KernelSpec(sigma), C)
    np.testing.assert_allclose(np.abs(model.dual_coefficients), best_a, rtol=1e-9)
    assert model.dual_coefficients[0] == -model.dual_coefficients[1]
    assert model.decision_function([[0.0]])[0] == pytest.approx(0.0, abs=1e-12)
    assert predict(model, [-1.0]) < 0 < predict(model, [1.0])


def test_xor_classifier():
    X = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
    labels = np.array([1, -1, -1, 1], dtype=float)
    model = fit_svc(ActivationTable(X, labels), KernelSpec(1.0), 100.0)
    assert np.all(np.sign(model.decision_function(X)) == labels)
    assert len(model.support_rows) == 4
    Q, p, y = oracles.svc_dual(X, labels, 1.0)
    _, obj = oracles.qp_projected_gradient(Q, p, y, 100.0)
    assert model.dual_objective <= obj + 1e-4


def test_degenerate_labels():
    with pytest.raises(DegenerateLabelsError):
        fit_svc(ActivationTable(np.eye(3), [1, 1, 1]))


def test_iteration_cap_raises():
    rng = np.random.default_rng(0)
    X, labels, _ = random_problem(rng)
    with pytest.raises(ConvergenceError):
        fit_svc(ActivationTable(X, labels), KernelSpec(1.0), 10.0, tol=1e-12, max_iter=1)


@pytest.mark.parametrize("seed", range(10))
def test_svc_matches_qp_oracle(seed):
    rng = np.random.default_rng(seed)
    X, labels, _ = random_problem(rng)
    model = fit_svc(ActivationTable(X, labels), KernelSpec(1.0), 10.0, tol=1e-6)
    Q, p, y = oracles.svc_dual(X, labels, 1.0)
    _, obj = oracles.qp_projected_gradient(Q, p, y, 10.0)
    assert abs(model.dual_objective - obj) < 1e-6


def test_svc_kkt_on_fitted_model():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(40, 3))
    labels = np.where(X[:, 0] + 0.3 * rng.normal(size=40) > 0, 1.0, -1.0)
    C, tol = 5.0, 1e-3
    model = fit_svc(ActivationTable(X, labels), KernelSpec(1.0), C, tol=tol)
    coef = np.zeros(40)
    for row, c in zip(model.support_rows, model.dual_coefficients):
        coef[np.flatnonzero(np.all(X == row, axis=1))[0]] = c
    alpha = coef * labels
    margin = labels * model.decision_function(X)
    free = (alpha > 1e-9) & (alpha < C - 1e-9)
    assert np.all(np.abs(margin[free] - 1) < tol)
    assert np.all(margin[alpha <= 1e-9] >= 1 - tol)
    assert np.all(margin[alpha >= C - 1e-9] <= 1 + tol)
    # non-bound support vectors are classified correctly
    assert np.all(np.sign(model.decision_function(X[free])) == labels[free])
    assert abs(np.sum(model.dual_coefficients)) < 1e-9
    assert np.all(np.abs(model.dual_coefficients) <= C + 1e-9)


# --------------------------------------------------------------------------- SVR


def test_svr_constant_targets():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(12, 3))
    model = fit_svr(ActivationTable(X, np.full(12, 0.7)), KernelSpec(2.0), 10.0, epsilon=0.05)
    assert len(model.support_rows) == 0
    assert model.bias == pytest.approx(0.7, abs=1e-12)
    assert np.all(np.abs(model.decision_function(rng.normal(size=(5, 3))) - 0.7) <= 0.05)


def test_svr_five_point_toy():
    X = np.array([[-2.0], [-1.0], [0.0], [1.0], [2.0]])
    d = np.array([0.5, -0.3, 0.2, 1.0, 0.1])
    model = fit_svr(ActivationTable(X, d), KernelSpec(1.0), 10.0, epsilon=0.1, tol=1e-6)
    Q, p, y = oracles.svr_dual(X, d, 1.0, 0.1)
    _, obj = oracles.qp_projected_gradient(Q, p, y, 10.0)
    assert abs(model.dual_objective - obj) < 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_svr_matches_qp_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    X, _, d = random_problem(rng)
    model = fit_svr(ActivationTable(X, d), KernelSpec(1.0), 10.0, epsilon=0.1, tol=1e-6)
    Q, p, y = oracles.svr_dual(X, d, 1.0, 0.1)
    _, obj = oracles.qp_projected_gradient(Q, p, y, 10.0)
    assert abs(model.dual_objective - obj) < 1e-6


def test_svr_outside_tube_at_bound():
    rng = np.random.default_rng(2)
    X = rng.uniform(-1, 1, size=(60, 2))
    d = np.sin(3 * X[:, 0]) + 0.3 * rng.normal(size=60)
    C, eps, tol = 1.0, 0.05, 1e-4
    model = fit_svr(ActivationTable(X, d), KernelSpec(0.5), C, epsilon=eps, tol=tol)
    coef = dict(zip(map(bytes, model.support_rows), model.dual_coefficients))
    resid = model.decision_function(X) - d
    for row, r in zip(X, resid):
        if abs(r) > eps + tol:
            assert abs(abs(coef.get(bytes(row), 0.0)) - C) < 1e-9
    assert np.all(np.abs(model.dual_coefficients) <= C + 1e-9)
    assert abs(np.sum(model.dual_coefficients)) < 1e-9


def test_large_table_uses_lru_cache_consistently(monkeypatch):
    import evoke.readout as ro
    rng = np.random.default_rng(3)
    X = rng.normal(size=(120, 3))
    d = np.tanh(X.sum(axis=1))
    full = fit_svr(ActivationTable(X, d), KernelSpec(2.0), 10.0, epsilon=0.01)
    monkeypatch.setattr(ro, "FULL_GRAM_LIMIT", 50)
    monkeypatch.setattr(ro, "LRU_ROWS", 7)
    small = ro.fit_svr(ActivationTable(X, d), KernelSpec(2.0), 10.0, epsilon=0.01)
    np.testing.assert_array_equal(full.dual_coefficients, small.dual_coefficients)
    assert full.bias == small.bias


# --------------------------------------------------------------------------- predict


def test_predict_without_support_rows():
    model = SvmModel(np.zeros((0, 3)), np.zeros(0), 0.25, KernelSpec(2.0), 1.0)
    assert predict(model, [1.0, 2.0, 3.0]) == 0.25


def test_predict_single_support_row():
    s = np.array([0.1, -0.4])
    model = SvmModel(s.reshape(1, -1), np.array([0.8]), -0.3, KernelSpec(2.0), 1.0)
    assert predict(model, s) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        predict(model, [1.0, 2.0, 3.0])


def test_predict_is_pure():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(20, 2))
    model = fit_svr(ActivationTable(X, X[:, 0]), KernelSpec(1.0), 10.0)
    before = model.to_text()
    a = model.decision_function(X)
    b = model.decision_function(X)
    assert a.tobytes() == b.tobytes() and model.to_text() == before


def test_model_text_roundtrip():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(15, 3))
    model = fit_svr(ActivationTable(X, np.cos(X[:, 1])), KernelSpec(2.0), 10.0, epsilon=0.01)
    text = model.to_text()
    back = SvmModel.from_text(text)
    assert back.to_text() == text
    np.testing.assert_array_equal(back.decision_function(X), model.decision_function(X))


# --------------------------------------------------------------------------- pseudoinverse


def test_pinv_identity_interpolation():
    readout = fit_pseudoinverse(ActivationTable(np.eye(2), [1.0, 2.0]), fit_bias=False)
    np.testing.assert_allclose(readout.weights, [1.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(readout.decision_function(np.eye(2)), [1.0, 2.0], atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_pinv_matches_normal_equations(seed):
    rng = np.random.default_rng(seed)
    H = int(rng.integers(1, 11))
    rows = rng.uniform(-1, 1, size=(50, H))
    d = rng.normal(size=50)
    readout = fit_pseudoinverse(ActivationTable(rows, d))
    w, b = oracles.normal_equations(rows, d)
    r1 = readout.decision_function(rows) - d
    r2 = rows @ w + b - d
    assert abs(r1 @ r1 - r2 @ r2) < 1e-8
    np.testing.assert_allclose(readout.weights, w, atol=1e-8)


def test_pinv_rank_deficient_min_norm():
    rng = np.random.default_rng(6)
    col = rng.normal(size=(30, 1))
    rows = np.hstack([col, col, rng.normal(size=(30, 1))])
    readout = fit_pseudoinverse(ActivationTable(rows, rng.normal(size=30)))
    assert readout.weights[0] == pytest.approx(readout.weights[1], abs=1e-10)


def test_pinv_beats_random_candidates():
    rng = np.random.default_rng(7)
    rows = rng.normal(size=(40, 4))
    d = rows @ rng.normal(size=4) + 0.5 * rng.normal(size=40)
    readout = fit_pseudoinverse(ActivationTable(rows, d))
    best = np.mean((readout.decision_function(rows) - d) ** 2)
    for _ in range(100):
        w, b = rng.normal(size=4), rng.normal()
        assert best <= np.mean((rows @ w + b - d) ** 2)


def test_predict_linear():
    assert predict_linear(LinearReadout(np.zeros(3), 0.4), [1.0, 2.0, 3.0]) == 0.4
    assert predict_linear(LinearReadout(np.array([1.0, 0.0]), 0.0), [3.0, 9.0]) == 3.0
    with pytest.raises(ValueError):
        predict_linear(LinearReadout(np.zeros(2)), [1.0])
