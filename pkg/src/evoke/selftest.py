"""Oracle suite: fast checks of every numerical core against an independent
reference. Run with ``python -m evoke selftest``."""
from __future__ import annotations

import numpy as np

from . import oracles
from .lstm import decode_genome, step
from .neuroevolution import Subpopulation, select_and_mutate
from .readout import ActivationTable, KernelSpec, fit_pseudoinverse, fit_svc, fit_svr

SMO_TOL = 1e-6


def _toy_problems(seed, count=10, n_max=8):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(3, n_max + 1))
        X = rng.normal(size=(n, 2))
        labels = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        labels[:2] = (1.0, -1.0)
        yield X, labels, rng.normal(size=n)


def check_smo_classification(seed=0, C=10.0, sigma=1.0):
    """Largest |SMO objective - QP oracle objective| over 10 SVC problems."""
    gaps = []
    for X, labels, _ in _toy_problems(seed):
        model = fit_svc(ActivationTable(X, labels), KernelSpec(sigma), C, tol=SMO_TOL)
        _, obj = oracles.qp_projected_gradient(*oracles.svc_dual(X, labels, sigma), C)
        gaps.append(abs(model.dual_objective - obj))
    return max(gaps)


def check_smo_regression(seed=1, C=10.0, sigma=1.0, epsilon=0.1):
    gaps = []
    for X, _, d in _toy_problems(seed):
        model = fit_svr(ActivationTable(X, d), KernelSpec(sigma), C, epsilon, tol=SMO_TOL)
        _, obj = oracles.qp_projected_gradient(*oracles.svr_dual(X, d, sigma, epsilon), C)
        gaps.append(abs(model.dual_objective - obj))
    return max(gaps)


def check_pseudoinverse(seed=2):
    """Largest residual-SSE gap to the normal equations over 10 random 50xH tables."""
    rng = np.random.default_rng(seed)
    gaps = []
    for _ in range(10):
        H = int(rng.integers(1, 11))
        rows, d = rng.uniform(-1, 1, size=(50, H)), rng.normal(size=50)
        r1 = fit_pseudoinverse(ActivationTable(rows, d)).decision_function(rows) - d
        w, b = oracles.normal_equations(rows, d)
        r2 = rows @ w + b - d
        gaps.append(abs(r1 @ r1 - r2 @ r2))
    return max(gaps)


def check_lstm_scalar():
    """|phi - hand value| for one cell, all weights 1, input 1."""
    phi = step(decode_genome([np.ones(8)], 1), [1.0])[0]
    _, ref = oracles.lstm_single_cell_step((1, 1), (1, 1), (1, 1), (1, 1), 1.0, 0.0, 0.0)
    return abs(phi - ref)


def check_cauchy_median(alpha=0.1, seed=3):
    """Median |noise| of the mutation operator over 10^4 weights."""
    rng = np.random.default_rng(seed)
    sp = Subpopulation(0, rng.normal(size=(400, 100)))
    sp.trials[:] = 1
    out = select_and_mutate(sp, alpha, rng)
    noise = (out.members[300:] - out.members[:100]).ravel()
    return float(np.median(np.abs(noise)))


CHECKS = [
    ("SMO classification vs QP oracle", check_smo_classification, lambda v: v < 1e-6),
    ("SMO regression vs QP oracle", check_smo_regression, lambda v: v < 1e-6),
    ("pseudoinverse vs normal equations", check_pseudoinverse, lambda v: v < 1e-8),
    ("LSTM step vs scalar hand computation", check_lstm_scalar, lambda v: v < 1e-12),
    ("Cauchy mutation median |noise| (alpha=0.1)", check_cauchy_median, lambda v: 0.08 <= v <= 0.12),
]


def run(echo=print) -> bool:
    ok = True
    for name, fn, accept in CHECKS:
        value = fn()
        passed = bool(accept(value))
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {name}: {value:.3g}")
    return ok
