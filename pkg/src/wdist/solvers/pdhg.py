"""Unregularized transport by the primal-dual hybrid gradient method.

The linear program ``min <T, C>`` over couplings is written as the saddle
point

    max_{l1, l2} min_{t >= 0} <(l1, l2), K t> + <c, t> - <l1, mu> - <l2, nu>

with ``t`` the row-major vectorization of ``T`` and ``K t = (T 1, T^T 1)``.
At a saddle point ``(-l1, -l2)`` are optimal dual potentials of the LP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import DualPotentials, SolveReport, SolverConfig, TransportPlan, check_problem

HISTORY_EVERY = 100


@dataclass(frozen=True)
class MarginalOperator:
    """Matrix-free map from a vectorized ``n x m`` plan to its marginals."""

    n: int
    m: int

    def apply(self, t):
        T = np.reshape(t, (self.n, self.m))
        return np.concatenate([T.sum(axis=1), T.sum(axis=0)])

    def adjoint(self, lam):
        l1, l2 = lam[: self.n], lam[self.n :]
        return (l1[:, None] + l2[None, :]).ravel()

    def materialize(self):
        """Dense ``(n + m) x (n m)`` matrix, for tests."""
        eye = np.eye(self.n * self.m)
        return np.stack([self.apply(col) for col in eye], axis=1)


def operator_norm_bound(op):
    """``sqrt(n + m)``, the exact norm of the marginal operator.

    ``K K^T = [[m I, 1 1^T], [1 1^T, n I]]`` has top eigenvalue ``n + m``
    with eigenvector all-ones, so the bound is attained.
    """
    return math.sqrt(op.n + op.m)


def solve_pdhg(C, mu, nu, cfg=None, check_every=10):
    """Solve the unregularized problem with PDHG.

    Iterates the primal step ``t <- max(t - tau (K^T lam + c), 0)``, the
    extrapolation ``2 t_new - t`` and the dual ascent step with
    ``sigma = 1 / (tau L^2)``, starting from zero. The run counts as converged
    once the marginal residual, the duality gap and the dual infeasibility of
    ``(-l1, -l2)`` are all at most ``cfg.tol``; these are tested every
    ``check_every`` iterations.

    Returns ``(plan, potentials, report)``. ``potentials`` are ``(-l1, -l2)``.
    """
    cfg = cfg or SolverConfig(epsilon=0.0)
    C, mu, nu = check_problem(C, mu, nu)
    n, m = C.shape
    op = MarginalOperator(n, m)
    c = C.values
    a, b = mu.weights, nu.weights
    tau = float(cfg.tau)
    sigma = 1.0 / (tau * operator_norm_bound(op) ** 2)

    T = np.zeros((n, m))
    l1 = np.zeros(n)
    l2 = np.zeros(m)
    history = []
    converged = False
    residual = gap = violation = math.inf
    k = 0
    for k in range(1, int(cfg.max_iter) + 1):
        T_new = np.maximum(T - tau * (l1[:, None] + l2[None, :] + c), 0.0)
        T_bar = 2.0 * T_new - T
        T = T_new
        l1 = l1 + sigma * (T_bar.sum(axis=1) - a)
        l2 = l2 + sigma * (T_bar.sum(axis=0) - b)

        if k % check_every == 0 or k == cfg.max_iter:
            residual = max(np.abs(T.sum(axis=1) - a).max(), np.abs(T.sum(axis=0) - b).max())
            primal = float(np.sum(T * c))
            dual = -float(l1 @ a + l2 @ b)
            gap = abs(primal - dual)
            violation = float(np.max(-l1[:, None] - l2[None, :] - c))
            if k % HISTORY_EVERY == 0:
                history.append((k, float(residual), primal))
            if residual <= cfg.tol and gap <= cfg.tol and violation <= cfg.tol:
                converged = True
                break

    plan = TransportPlan(T)
    distance = float(np.sum(np.ascontiguousarray(T * c)))
    if not history or history[-1][0] != k:
        history.append((k, float(residual), distance))
    report = SolveReport(
        distance=distance,
        regularized_objective=distance,
        iterations=k,
        marginal_residual=float(residual),
        converged=converged,
        history=tuple(history),
        info={
            "solver": "pdhg",
            "tau": tau,
            "sigma": sigma,
            "duality_gap": float(gap),
            "dual_violation": float(violation),
        },
    )
    return plan, DualPotentials(-l1, -l2), report
