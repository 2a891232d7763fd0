"""Independent oracles for checking the solvers.

Nothing here imports a solver module: the exact small-instance value comes
from brute-force enumeration of permutations, which is correct for uniform
marginals because the vertices of the Birkhoff polytope are permutation
matrices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import DualPotentials, TransportPlan, as_cost, as_measure
from .exceptions import Unsupported

MAX_ORACLE_SIZE = 8


@dataclass(frozen=True)
class Certificate:
    primal_value: float
    dual_value: float
    gap: float
    max_dual_violation: float
    max_marginal_residual: float

    def to_dict(self):
        return dict(self.__dict__)


def exact_uniform_wasserstein(C):
    """Exact transport cost between two uniform measures of equal size.

    Returns ``(value, plan)`` where ``plan`` is the optimal permutation matrix
    divided by ``n``. Ties are broken by the lexicographically smallest
    permutation.
    """
    c = as_cost(C).values
    n, m = c.shape
    if n != m or n > MAX_ORACLE_SIZE:
        raise Unsupported(f"oracle needs a square cost with n <= {MAX_ORACLE_SIZE}, got {c.shape}")
    rows = np.arange(n)
    best_total, best_perm = np.inf, None
    # itertools yields permutations in lexicographic order; strict '<' keeps the first minimum
    for perm in itertools.permutations(range(n)):
        total = c[rows, perm].sum()
        if total < best_total:
            best_total, best_perm = total, perm
    plan = np.zeros((n, n))
    plan[rows, best_perm] = 1.0 / n
    return float(best_total / n), TransportPlan(plan)


def permutation_potentials(C, plan):
    """Optimal dual potentials for a permutation plan with uniform weights.

    Complementary slackness fixes ``beta[s(k)] = C[k, s(k)] - alpha[k]`` on
    the matching ``s``; feasibility then reads
    ``alpha[i] <= alpha[k] + C[i, s(k)] - C[k, s(k)]``, a shortest-path
    system that Bellman-Ford solves from ``alpha = 0``. It has a solution iff
    the matching is optimal (no negative cycle).
    """
    c = as_cost(C).values
    t = plan.values if isinstance(plan, TransportPlan) else np.asarray(plan)
    n = c.shape[0]
    match = np.argmax(t, axis=1)
    rows = np.arange(n)
    # weight[k, i] = C[i, s(k)] - C[k, s(k)]
    weight = c[:, match].T - c[rows, match][:, None]
    alpha = np.zeros(n)
    for _ in range(n):
        relaxed = np.minimum(alpha, np.min(alpha[:, None] + weight, axis=0))
        if np.array_equal(relaxed, alpha):
            break
        alpha = relaxed
    beta = np.empty(n)
    beta[match] = c[rows, match] - alpha
    return DualPotentials(alpha, beta)


def certify(T, potentials, C, mu, nu):
    """Primal/dual values, gap and feasibility violations for a candidate pair."""
    c = as_cost(C).values
    mu, nu = as_measure(mu), as_measure(nu)
    t = T.values if isinstance(T, TransportPlan) else np.asarray(T, dtype=np.float64)
    primal = float(np.sum(t * c))
    dual = float(potentials.alpha @ mu.weights + potentials.beta @ nu.weights)
    violation = float(np.max(potentials.alpha[:, None] + potentials.beta[None, :] - c))
    residual = float(
        max(
            np.abs(t.sum(axis=1) - mu.weights).max(),
            np.abs(t.sum(axis=0) - nu.weights).max(),
        )
    )
    return Certificate(primal, dual, abs(primal - dual), violation, residual)


def finite_difference_gradient(func, point, step=1e-6):
    """Central-difference gradient of a scalar function."""
    if not step > 0:
        raise ValueError("step must be positive")
    x0 = np.array(point, dtype=np.float64)
    grad = np.zeros_like(x0)
    flat = grad.reshape(-1)
    for k in range(x0.size):
        x = x0.copy().reshape(-1)
        x[k] += step
        fplus = func(x.reshape(x0.shape))
        x[k] -= 2 * step
        fminus = func(x.reshape(x0.shape))
        flat[k] = (fplus - fminus) / (2 * step)
    return grad
