"""Transport solvers and a name-based dispatcher."""

from __future__ import annotations

from ..exceptions import InvalidArgument
from .entropic import solve_sinkhorn, solve_sinkhorn_center
from .pdhg import solve_pdhg
from .quadratic import solve_fista, solve_fista_center

SOLVERS = ("pdhg", "sinkhorn", "sinkhorn_center", "fista", "fista_center")


def canonical_solver(name):
    """Normalize ``"sinkhorn-center"`` style names to ``"sinkhorn_center"``."""
    key = str(name).lower().replace("-", "_")
    if key not in SOLVERS:
        raise InvalidArgument(f"unknown solver {name!r}; choose from {SOLVERS}")
    return key


def solve(C, mu, nu, solver="sinkhorn", cfg=None, outer_iter=None):
    """Run ``solver`` and return ``(plan, potentials, report)``.

    ``potentials`` is ``None`` for the entropic solvers, which do not expose
    dual variables. ``outer_iter`` only applies to the centered solvers and
    falls back to their own defaults.
    """
    key = canonical_solver(solver)
    extra = {} if outer_iter is None else {"outer_iter": outer_iter}
    if key == "pdhg":
        return solve_pdhg(C, mu, nu, cfg)
    if key == "sinkhorn":
        plan, report = solve_sinkhorn(C, mu, nu, cfg)
        return plan, None, report
    if key == "sinkhorn_center":
        plan, report = solve_sinkhorn_center(C, mu, nu, cfg, **extra)
        return plan, None, report
    if key == "fista":
        return solve_fista(C, mu, nu, cfg)
    return solve_fista_center(C, mu, nu, cfg, **extra)


__all__ = [
    "SOLVERS",
    "canonical_solver",
    "solve",
    "solve_fista",
    "solve_fista_center",
    "solve_pdhg",
    "solve_sinkhorn",
    "solve_sinkhorn_center",
]
