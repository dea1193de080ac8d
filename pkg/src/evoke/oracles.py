"""Independent reference computations used to check the fast paths.

Nothing here shares code with the routines it checks: the QP oracle is an
accelerated projected-gradient method, the least-squares oracle solves the
normal equations, and the LSTM oracle is scalar ``math`` arithmetic.
"""
from __future__ import annotations

import math

import numpy as np


def project_box_hyperplane(v, y, C):
    """Euclidean projection of ``v`` onto {0 <= a <= C, y'a = 0}, y in {-1, +1}.

    ``h(lam) = y'clip(v - lam*y, 0, C)`` is piecewise linear and
    non-increasing; its root is found exactly between breakpoints.
    """
    knots = np.unique(np.concatenate([v * y, (v - C) * y]))
    h = np.clip(v[None, :] - knots[:, None] * y[None, :], 0.0, C) @ y
    k = np.searchsorted(-h, 0.0)
    if k == 0:
        lam = knots[0]
    elif k == len(knots):
        lam = knots[-1]
    elif h[k - 1] == h[k]:
        lam = knots[k]
    else:
        lam = knots[k - 1] + (knots[k] - knots[k - 1]) * h[k - 1] / (h[k - 1] - h[k])
    return np.clip(v - lam * y, 0.0, C)


def qp_projected_gradient(Q, p, y, C, n_iter=5000):
    """Minimise 0.5 a'Qa + p'a on the SVM dual feasible set (FISTA).

    Returns (a, objective).
    """
    Q = np.asarray(Q, dtype=float)
    step = 1.0 / max(np.linalg.eigvalsh(Q).max(), 1e-12)
    a = np.zeros(len(p))
    z = a.copy()
    t = 1.0
    for _ in range(n_iter):
        a_next = project_box_hyperplane(z - step * (Q @ z + p), y, C)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = a_next + ((t - 1.0) / t_next) * (a_next - a)
        a, t = a_next, t_next
    return a, 0.5 * a @ Q @ a + p @ a


def gaussian_gram(X, sigma):
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    K = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            K[i, j] = math.exp(-sum((X[i] - X[j]) ** 2) / (2.0 * sigma ** 2))
    return K


def svc_dual(X, labels, sigma):
    """(Q, p, y) of the classification dual."""
    labels = np.asarray(labels, dtype=float)
    return np.outer(labels, labels) * gaussian_gram(X, sigma), -np.ones(len(labels)), labels


def svr_dual(X, targets, sigma, epsilon):
    """(Q, p, y) of the epsilon-SVR dual over the stacked (a, a*) variables."""
    d = np.asarray(targets, dtype=float)
    K = gaussian_gram(X, sigma)
    Q = np.block([[K, -K], [-K, K]])
    p = np.concatenate([epsilon - d, epsilon + d])
    y = np.concatenate([np.ones(len(d)), -np.ones(len(d))])
    return Q, p, y


def normal_equations(rows, targets):
    """Least-squares (weights, bias) via (A'A) w = A'd, A = [rows, 1]."""
    A = np.column_stack([rows, np.ones(len(rows))])
    w = np.linalg.solve(A.T @ A, A.T @ np.asarray(targets, dtype=float))
    return w[:-1], w[-1]


def lstm_single_cell_step(w_g, w_in, w_f, w_o, u, s_prev, out_prev, b_f=0.0, b_o=0.0):
    """One scalar forget-gate LSTM step for a single cell with one input.

    Each weight argument is a pair (input weight, recurrent weight).
    Returns (state, output).
    """
    def sig(x):
        return 1.0 / (1.0 + math.exp(-x))

    net_g = w_g[0] * u + w_g[1] * out_prev
    net_in = w_in[0] * u + w_in[1] * out_prev
    net_f = w_f[0] * u + w_f[1] * out_prev + b_f
    net_o = w_o[0] * u + w_o[1] * out_prev + b_o
    s = sig(net_f) * s_prev + sig(net_in) * math.tanh(net_g)
    return s, sig(net_o) * math.tanh(s)


def cauchy_median_abs(alpha, n, rng):
    """Empirical median of |alpha * standard Cauchy| over n draws."""
    return float(np.median(np.abs(alpha * rng.standard_cauchy(n))))
