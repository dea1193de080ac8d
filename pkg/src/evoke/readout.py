"""Output layers fitted per candidate network.

Two families share the ``decision_function(rows)`` interface:

* :class:`SvmModel` -- a Gaussian-kernel expansion over stored activation
  rows, fitted by SMO either as a soft-margin classifier (:func:`fit_svc`)
  or as an epsilon-insensitive regressor (:func:`fit_svr`);
* :class:`LinearReadout` -- the least-squares linear map obtained from the
  Moore-Penrose pseudoinverse (:func:`fit_pseudoinverse`).

The SMO solver works on the common dual form::

    min  0.5 a'Qa + p'a   s.t.  y'a = 0,  0 <= a <= C,   Q_ij = y_i y_j K_ij

Classification uses one variable per row; regression uses two (``a`` and
``a*``) with ``y = (+1.., -1..)`` and ``p = (eps - d, eps + d)``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .errors import ConvergenceError, DegenerateLabelsError

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 10_000_000
FULL_GRAM_LIMIT = 4000
LRU_ROWS = 1000
TAU = 1e-12


@dataclass
class ActivationTable:
    """Activation rows of all training sequences with aligned targets.

    ``boundaries`` holds k + 1 offsets; sequence i occupies
    ``rows[boundaries[i]:boundaries[i + 1]]``.
    """

    rows: np.ndarray
    targets: np.ndarray
    boundaries: Optional[np.ndarray] = None

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        self.targets = np.asarray(self.targets, dtype=float).reshape(-1)
        if self.rows.shape[0] != self.targets.shape[0]:
            raise ValueError("rows and targets differ in length")
        if self.boundaries is None:
            self.boundaries = np.array([0, self.rows.shape[0]])
        self.boundaries = np.asarray(self.boundaries, dtype=int)
        b = self.boundaries
        if b[0] != 0 or b[-1] != self.rows.shape[0] or np.any(np.diff(b) < 0):
            raise ValueError("boundaries must partition the rows")

    def __len__(self):
        return self.rows.shape[0]

    @classmethod
    def concat(cls, blocks) -> "ActivationTable":
        """Stack (rows, targets) pairs, one per sequence."""
        blocks = list(blocks)
        lengths = [len(r) for r, _ in blocks]
        width = blocks[0][0].shape[1] if blocks else 0
        rows = np.concatenate([np.reshape(r, (-1, width)) for r, _ in blocks]) if blocks else np.zeros((0, 0))
        targets = np.concatenate([np.reshape(d, -1) for _, d in blocks]) if blocks else np.zeros(0)
        return cls(rows, targets, np.concatenate([[0], np.cumsum(lengths)]))


@dataclass(frozen=True)
class KernelSpec:
    sigma: float = 2.0
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unsupported kernel {self.kind!r}")
        if not self.sigma > 0:
            raise ValueError("kernel sigma must be positive")


def gaussian_kernel(x, y, sigma: float) -> float:
    """K(x, y) = exp(-|x - y|^2 / (2 sigma^2))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("kernel arguments differ in length")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    d = x - y
    return float(np.exp(-np.dot(d, d) / (2.0 * sigma * sigma)))


def gram_matrix(a, b, sigma: float) -> np.ndarray:
    """Gaussian kernel between every row of ``a`` and every row of ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    sq = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1)
    return np.exp(-sq / (2.0 * sigma * sigma))


# --------------------------------------------------------------------------- SMO


@njit(cache=True)
def _kernel_row(X, gamma, i, out):
    n, d = X.shape
    for j in range(n):
        acc = 0.0
        for k in range(d):
            diff = X[i, k] - X[j, k]
            acc += diff * diff
        out[j] = np.exp(-gamma * acc)


@njit(cache=True)
def _cached_row(X, gamma, i, cache, slot_of, owner, stamp, clock):
    s = slot_of[i]
    if s < 0:
        # evict the least recently used slot
        s = 0
        for k in range(1, stamp.shape[0]):
            if stamp[k] < stamp[s]:
                s = k
        if owner[s] >= 0:
            slot_of[owner[s]] = -1
        owner[s] = i
        slot_of[i] = s
        _kernel_row(X, gamma, i, cache[s])
    stamp[s] = clock
    return cache[s]


@njit(cache=True)
def _smo(X, gamma, y, p, C, tol, max_iter, cache_rows):
    n_var = y.shape[0]
    n = X.shape[0]
    cache = np.empty((cache_rows, n))
    slot_of = -np.ones(n, dtype=np.int64)
    owner = -np.ones(cache_rows, dtype=np.int64)
    stamp = np.zeros(cache_rows, dtype=np.int64)

    alpha = np.zeros(n_var)
    G = p.copy()
    it = 0
    converged = False
    while it < max_iter:
        # maximal violating pair
        g_max = -np.inf
        g_min = np.inf
        i = -1
        j = -1
        for t in range(n_var):
            v = -y[t] * G[t]
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                if v > g_max:
                    g_max = v
                    i = t
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                if v < g_min:
                    g_min = v
                    j = t
        if i < 0 or j < 0 or g_max - g_min < tol:
            converged = True
            break
        it += 1

        bi = i % n
        bj = j % n
        Ki = _cached_row(X, gamma, bi, cache, slot_of, owner, stamp, 2 * it)
        Kj = _cached_row(X, gamma, bj, cache, slot_of, owner, stamp, 2 * it + 1)
        k_ij = Ki[bj]
        old_i = alpha[i]
        old_j = alpha[j]
        if y[i] != y[j]:
            quad = 2.0 + 2.0 * (y[i] * y[j] * k_ij)
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = 2.0 - 2.0 * (y[i] * y[j] * k_ij)
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        d_i = alpha[i] - old_i
        d_j = alpha[j] - old_j
        for t in range(n_var):
            bt = t % n
            G[t] += y[t] * (y[i] * Ki[bt] * d_i + y[j] * Kj[bt] * d_j)

    # bias from free variables, else the middle of the feasible interval
    ub = np.inf
    lb = -np.inf
    n_free = 0
    sum_free = 0.0
    for t in range(n_var):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            sum_free += yg
    if n_free > 0:
        rho = sum_free / n_free
    else:
        rho = (ub + lb) / 2.0
    return alpha, G, rho, it, converged


@dataclass(frozen=True)
class SvmModel:
    """Kernel expansion ``y = bias + sum_i coef_i K(phi, support_i)``.

    Only rows with a nonzero dual coefficient are stored.
    """

    support_rows: np.ndarray
    dual_coefficients: np.ndarray
    bias: float
    kernel: KernelSpec
    capacity: float
    epsilon: float = 0.0
    task: str = "classification"
    n_iter: int = 0
    dual_objective: float = float("nan")

    def decision_function(self, rows) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if self.support_rows.shape[0] == 0:
            return np.full(rows.shape[0], self.bias)
        if rows.shape[1] != self.support_rows.shape[1]:
            raise ValueError("row width differs from the support rows")
        return gram_matrix(rows, self.support_rows, self.kernel.sigma) @ self.dual_coefficients + self.bias

    def to_text(self) -> str:
        """Flat text form: a header with bias, sigma, C, epsilon, then one
        line per support row holding the coefficient and the row values."""
        buf = io.StringIO()
        buf.write(f"{self.bias!r} {self.kernel.sigma!r} {self.capacity!r} {self.epsilon!r} {self.task}\n")
        for c, row in zip(self.dual_coefficients, self.support_rows):
            buf.write(" ".join(repr(float(v)) for v in (c, *row)) + "\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "SvmModel":
        lines = text.strip("\n").split("\n")
        head = lines[0].split()
        bias, sigma, capacity, epsilon = (float(v) for v in head[:4])
        task = head[4] if len(head) > 4 else "classification"
        body = [[float(v) for v in line.split()] for line in lines[1:] if line.strip()]
        arr = np.array(body, dtype=float).reshape(len(body), -1)
        width = max(arr.shape[1] - 1, 0)
        return cls(arr[:, 1:].reshape(len(body), width), arr[:, 0].copy(), bias,
                   KernelSpec(sigma), capacity, epsilon, task)


def predict(model, phi) -> float:
    """Evaluate a fitted readout on a single activation vector."""
    phi = np.asarray(phi, dtype=float).reshape(1, -1)
    return float(model.decision_function(phi)[0])


def _solve(X, y, p, capacity, sigma, tol, max_iter):
    n = X.shape[0]
    cache_rows = n if n <= FULL_GRAM_LIMIT else LRU_ROWS
    gamma = 1.0 / (2.0 * sigma * sigma)
    alpha, G, rho, n_iter, converged = _smo(np.ascontiguousarray(X, dtype=float), gamma,
                                           y.astype(float), p.astype(float), float(capacity),
                                           float(tol), int(max_iter), cache_rows)
    if not converged:
        raise ConvergenceError(f"SMO did not reach tol={tol} within {max_iter} pair updates")
    objective = 0.5 * float(np.dot(alpha, G + p))
    return alpha, rho, n_iter, objective


def _check_fit_args(table, kernel, capacity):
    if not capacity > 0:
        raise ValueError("capacity C must be positive")
    if not isinstance(kernel, KernelSpec):
        kernel = KernelSpec(float(kernel))
    if not np.all(np.isfinite(table.rows)):
        raise ValueError("non-finite activation rows")
    return kernel


def fit_svc(table: ActivationTable, kernel=KernelSpec(), capacity: float = 100.0,
            tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SvmModel:
    """Soft-margin SVM classifier on targets in {-1, +1}."""
    kernel = _check_fit_args(table, kernel, capacity)
    labels = np.where(table.targets > 0, 1.0, -1.0)
    if np.all(labels > 0) or np.all(labels < 0):
        raise DegenerateLabelsError("classification targets contain a single class")
    alpha, rho, n_iter, objective = _solve(table.rows, labels, -np.ones_like(labels),
                                           capacity, kernel.sigma, tol, max_iter)
    coef = labels * alpha
    keep = alpha > 0
    return SvmModel(table.rows[keep].copy(), coef[keep], -rho, kernel, float(capacity),
                    0.0, "classification", n_iter, objective)


def fit_svr(table: ActivationTable, kernel=KernelSpec(), capacity: float = 10.0,
            epsilon: float = 0.01, tol: float = DEFAULT_TOL,
            max_iter: int = DEFAULT_MAX_ITER) -> SvmModel:
    """Epsilon-insensitive support vector regression."""
    kernel = _check_fit_args(table, kernel, capacity)
    if len(table) < 2:
        raise ValueError("SVR needs at least two rows")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    n = len(table)
    d = table.targets
    y = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([epsilon - d, epsilon + d])
    alpha, rho, n_iter, objective = _solve(table.rows, y, p, capacity, kernel.sigma, tol, max_iter)
    coef = alpha[:n] - alpha[n:]
    keep = coef != 0
    return SvmModel(table.rows[keep].copy(), coef[keep], -rho, kernel, float(capacity),
                    float(epsilon), "regression", n_iter, objective)


def svc_dual_objective(rows, labels, coef_alpha, sigma) -> float:
    """0.5 a'Qa - sum(a) for a classification dual point."""
    labels = np.asarray(labels, dtype=float)
    Q = np.outer(labels, labels) * gram_matrix(rows, rows, sigma)
    return 0.5 * coef_alpha @ Q @ coef_alpha - np.sum(coef_alpha)


# --------------------------------------------------------------------------- linear


@dataclass(frozen=True)
class LinearReadout:
    weights: np.ndarray
    bias: float = 0.0

    def decision_function(self, rows) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != self.weights.shape[0]:
            raise ValueError("row width differs from the readout weights")
        return rows @ self.weights + self.bias


def fit_pseudoinverse(table: ActivationTable, fit_bias: bool = True) -> LinearReadout:
    """Least-squares (minimum-norm when rank deficient) linear readout."""
    if len(table) == 0:
        raise ValueError("empty activation table")
    A = table.rows
    if fit_bias:
        A = np.column_stack([A, np.ones(len(table))])
    w = np.linalg.pinv(A) @ table.targets
    if fit_bias:
        return LinearReadout(w[:-1].copy(), float(w[-1]))
    return LinearReadout(w, 0.0)


def predict_linear(readout: LinearReadout, phi) -> float:
    return predict(readout, phi)
