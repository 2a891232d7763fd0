"""Debiased regularized distances and gradients with the plan held fixed."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SampleBatch, SolverConfig, TransportPlan, uniform_measure
from .costs import CostKind, pairwise_cost
from .exceptions import InvalidArgument, Unsupported
from .solvers import canonical_solver, solve

DIVERGENCE_SOLVERS = ("sinkhorn", "sinkhorn_center", "fista", "fista_center")
NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class DivergenceReport:
    """``value = 2 w_xy - w_xx - w_yy`` with the three component runs."""

    value: float
    w_xy: float
    w_xx: float
    w_yy: float
    solver_reports: tuple

    def to_dict(self):
        return {
            "value": self.value,
            "w_xy": self.w_xy,
            "w_xx": self.w_xx,
            "w_yy": self.w_yy,
            "solver_reports": [r.to_dict() for r in self.solver_reports],
        }


def _batch(X):
    return X if isinstance(X, SampleBatch) else SampleBatch(np.atleast_2d(X))


def sinkhorn_divergence(X, Y, kind=CostKind.SQUARED_L2, cfg=None, solver="sinkhorn",
                        use_regularized=True, outer_iter=None):
    """Debiased distance ``2 W(X, Y) - W(X, X) - W(Y, Y)``.

    All three terms use uniform weights over the rows and the same solver
    configuration, so their regularization bias is comparable. Each term is
    the regularized objective of its run, or the plain transport cost
    ``<T, C>`` when ``use_regularized`` is false.
    """
    key = canonical_solver(solver)
    if key not in DIVERGENCE_SOLVERS:
        raise InvalidArgument(f"divergence needs a regularized solver, got {solver!r}")
    X, Y = _batch(X), _batch(Y)
    cfg = cfg or SolverConfig()
    mx, my = uniform_measure(X.n), uniform_measure(Y.n)

    def term(A, B, ma, mb):
        _, _, report = solve(pairwise_cost(A, B, kind), ma, mb, key, cfg, outer_iter)
        value = report.regularized_objective if use_regularized else report.distance
        return value, report

    w_xy, r_xy = term(X, Y, mx, my)
    w_xx, r_xx = term(X, X, mx, mx)
    w_yy, r_yy = term(Y, Y, my, my)
    return DivergenceReport(2.0 * w_xy - w_xx - w_yy, w_xy, w_xx, w_yy, (r_xy, r_xx, r_yy))


def plan_gradient(T, X, Y, kind=CostKind.SQUARED_L2):
    """Gradient of ``sum_ij T_ij c(x_i, y_j)`` with respect to the rows of ``Y``.

    The plan is treated as a constant, which by the envelope theorem gives
    the gradient of the optimal transport cost itself. L2 uses a
    ``1e-12`` floor on the pair distance and L1 the zero subgradient at ties.

    Raises
    ------
    Unsupported
        For the SSIM cost.
    """
    kind = CostKind.parse(kind)
    t = T.values if isinstance(T, TransportPlan) else np.asarray(T, dtype=np.float64)
    x = _batch(X).data
    y = _batch(Y).data
    if t.shape != (x.shape[0], y.shape[0]):
        raise InvalidArgument(f"plan shape {t.shape} does not match batches")
    if kind is CostKind.SSIM:
        raise Unsupported("plan gradients are not available for the SSIM cost")

    if kind is CostKind.SQUARED_L2:
        return 2.0 * (t.sum(axis=0)[:, None] * y - t.T @ x)
    if kind is CostKind.COSINE:
        xn = x / np.linalg.norm(x, axis=1, keepdims=True)
        ny = np.linalg.norm(y, axis=1, keepdims=True)
        yn = y / ny
        # d/dy (1 - <xn, y>/|y|) = -(xn - <xn, yn> yn) / |y|
        pull = t.T @ xn
        along = np.sum(pull * yn, axis=1, keepdims=True)
        return -(pull - along * yn) / ny

    diff = y[None, :, :] - x[:, None, :]
    if kind is CostKind.L1:
        return np.einsum("ij,ijd->jd", t, np.sign(diff))
    dist = np.maximum(np.linalg.norm(diff, axis=2), NORM_FLOOR)
    return np.einsum("ij,ijd->jd", t / dist, diff)
