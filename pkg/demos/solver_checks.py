"""Compare the numerical cores against slow, independent references.

Prints the same lines as ``evoke selftest`` and then shows one SVM dual
next to the projected-gradient reference solution.
"""
import numpy as np

from evoke import oracles, selftest
from evoke.readout import ActivationTable, KernelSpec, fit_svc

selftest.run()

rng = np.random.default_rng(5)
X = rng.normal(size=(6, 2))
labels = np.array([1, -1, 1, -1, 1, -1], dtype=float)
model = fit_svc(ActivationTable(X, labels), KernelSpec(1.0), 10.0, tol=1e-8)
alpha_ref, obj_ref = oracles.qp_projected_gradient(*oracles.svc_dual(X, labels, 1.0), 10.0)
print("SMO objective      ", model.dual_objective)
print("reference objective", obj_ref)
print("reference alphas   ", np.round(alpha_ref, 6))
print("SMO coefficients   ", np.round(model.dual_coefficients, 6), "bias", round(model.bias, 6))
