"""Entropy-regularized transport: Sinkhorn scaling and its proximal variant.

Plans take the form ``diag(a) G diag(b)`` with the Gibbs kernel
``G = exp(-C / eps)``; ``a`` scales rows (source marginal ``mu``) and ``b``
scales columns (target marginal ``nu``). Each update pair first fits the
rows and then the columns, so after a pair the column marginal is exact up
to round-off and the row residual measures progress.

The log-domain path runs the same updates on ``eps * log a`` and
``eps * log b`` with a log-sum-exp reduction and cannot underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import SolveReport, SolverConfig, TransportPlan, check_problem
from ..exceptions import InvalidArgument, NumericalUnderflow

TINY = 1e-300


@dataclass
class ScalingState:
    """Scaling vectors and kernel of a Sinkhorn run."""

    a: np.ndarray
    b: np.ndarray
    gibbs: np.ndarray

    def plan(self):
        return self.a[:, None] * self.gibbs * self.b[None, :]


def _logsumexp(x, axis):
    top = np.max(x, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    out = np.log(np.sum(np.exp(x - top), axis=axis)) + np.squeeze(top, axis=axis)
    return out


def _xlogx(t):
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, t * np.log(safe), 0.0)


def _check_den(den):
    # overflowing scalings show up as zero denominators one half-step later
    if den.min() < TINY:
        raise NumericalUnderflow(
            "scaling denominator below 1e-300; epsilon is too small for this cost, "
            "use log_domain=True"
        )


def _scale(kernel, mu, nu, iters, tol):
    """Standard-domain scaling of ``kernel``; returns ``(a, b, pairs, residual)``."""
    kernel_t = np.ascontiguousarray(kernel.T)
    b = np.ones(kernel.shape[1])
    kb = kernel @ b
    residual = math.inf
    k = 0
    for k in range(1, iters + 1):
        _check_den(kb)
        a = mu / kb
        ka = kernel_t @ a
        _check_den(ka)
        b = nu / ka
        # the product K b doubles as the row check and the next row update
        kb = kernel @ b
        residual = float(np.abs(a * kb - mu).max())
        if residual <= tol:
            break
    return a, b, k, residual


def _scale_log(log_kernel, log_mu, log_nu, iters, tol, eps):
    """Log-domain scaling; returns potentials ``(f, g, pairs, residual)``.

    ``f = eps log a`` and ``g = eps log b``; the plan is
    ``exp(log_kernel + (f[:, None] + g[None, :]) / eps)``.
    """
    mu = np.exp(log_mu)
    g = np.zeros(log_kernel.shape[1])
    residual = math.inf
    k = 0
    lse = _logsumexp(log_kernel, axis=1)
    for k in range(1, iters + 1):
        f = eps * (log_mu - lse)
        g = eps * (log_nu - _logsumexp(log_kernel + f[:, None] / eps, axis=0))
        lse = _logsumexp(log_kernel + g[None, :] / eps, axis=1)
        residual = float(np.abs(np.exp(f / eps + lse) - mu).max())
        if residual <= tol:
            break
    return f, g, k, residual


def _check_eps(cfg):
    if not cfg.epsilon > 0:
        raise InvalidArgument("entropic solvers need epsilon > 0")


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def solve_sinkhorn(C, mu, nu, cfg=None):
    """Sinkhorn scaling for ``min <T, C> + eps * sum T log T`` over couplings.

    ``report.distance`` is the unregularized cost ``<T, C>`` of the returned
    plan; ``report.regularized_objective`` adds ``eps * sum T log T``.

    Raises
    ------
    NumericalUnderflow
        If a scaling denominator drops below 1e-300 in the standard domain.
    """
    cfg = cfg or SolverConfig()
    _check_eps(cfg)
    C, mu, nu = check_problem(C, mu, nu)
    c, eps = C.values, float(cfg.epsilon)

    if cfg.log_domain:
        f, g, pairs, residual = _scale_log(
            -c / eps, _log(mu.weights), _log(nu.weights), int(cfg.max_iter), cfg.tol, eps
        )
        T = np.exp((f[:, None] + g[None, :] - c) / eps)
    else:
        state = ScalingState(None, None, np.exp(-c / eps))
        state.a, state.b, pairs, residual = _scale(
            state.gibbs, mu.weights, nu.weights, int(cfg.max_iter), cfg.tol
        )
        T = state.plan()

    distance = float(np.sum(T * c))
    regularized = distance + eps * float(np.sum(_xlogx(T)))
    report = SolveReport(
        distance=distance,
        regularized_objective=regularized,
        iterations=pairs,
        marginal_residual=residual,
        converged=residual <= cfg.tol,
        history=((pairs, residual, distance),),
        info={"solver": "sinkhorn", "epsilon": eps, "log_domain": bool(cfg.log_domain)},
    )
    return TransportPlan(T), report


def solve_sinkhorn_center(C, mu, nu, cfg=None, outer_iter=100):
    """Proximal-point Sinkhorn with a moving entropic center.

    Each outer step solves ``min <T, C> + eps * KL(T | T_k)`` approximately:
    the kernel ``Q = T_k * G`` (entrywise) is rescaled by up to
    ``cfg.inner_iter`` update pairs starting from ``b = 1``. The first center
    is the independent coupling ``mu nu^T``.

    ``report.history`` holds ``(outer step, residual, <T_k, C>)`` for every
    outer step including step 0. ``report.regularized_objective`` is the
    proximal objective ``<T, C> + eps * KL(T | T_prev)`` of the final step.
    """
    cfg = cfg or SolverConfig()
    _check_eps(cfg)
    if int(outer_iter) != outer_iter or outer_iter < 0:
        raise InvalidArgument("outer_iter must be a nonnegative integer")
    C, mu, nu = check_problem(C, mu, nu)
    c, eps = C.values, float(cfg.epsilon)
    inner = int(cfg.inner_iter)

    T = np.outer(mu.weights, nu.weights)
    T_prev = T
    residual = 0.0
    history = [(0, residual, float(np.sum(T * c)))]
    log_mu, log_nu = _log(mu.weights), _log(nu.weights)
    gibbs = None if cfg.log_domain else np.exp(-c / eps)

    for k in range(1, int(outer_iter) + 1):
        T_prev = T
        if cfg.log_domain:
            log_q = _log(T) - c / eps
            f, g, _, residual = _scale_log(log_q, log_mu, log_nu, inner, cfg.tol, eps)
            T = np.exp(log_q + (f[:, None] + g[None, :]) / eps)
        else:
            q = T * gibbs
            a, b, _, residual = _scale(q, mu.weights, nu.weights, inner, cfg.tol)
            T = a[:, None] * q * b[None, :]
        history.append((k, residual, float(np.sum(T * c))))

    distance = float(np.sum(T * c))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(T > 0, T / np.where(T_prev > 0, T_prev, 1.0), 1.0)
    kl = float(np.sum(T * np.log(ratio) - T + T_prev))
    report = SolveReport(
        distance=distance,
        regularized_objective=distance + eps * kl,
        iterations=int(outer_iter),
        marginal_residual=float(residual),
        converged=residual <= cfg.tol,
        history=tuple(history),
        info={
            "solver": "sinkhorn_center",
            "epsilon": eps,
            "log_domain": bool(cfg.log_domain),
            "inner_iter": inner,
            "center_product": "entrywise",
            "initial_center": "independent coupling",
        },
    )
    return TransportPlan(T), report
