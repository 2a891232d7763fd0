"""Discrete optimal transport solvers, Lipschitz critics and Wasserstein benchmarks."""

__version__ = "0.1.0"

from .core import (
    CostMatrix,
    DiscreteMeasure,
    DualPotentials,
    SampleBatch,
    SolveReport,
    SolverConfig,
    TransportPlan,
    transport_cost,
    uniform_measure,
)
from .costs import CostKind, pairwise_cost
from .divergence import DivergenceReport, plan_gradient, sinkhorn_divergence
from .estimators import LipschitzCritic, SinkhornDivergence, ToyGenerator, WassersteinDistance
from .solvers import (
    solve,
    solve_fista,
    solve_fista_center,
    solve_pdhg,
    solve_sinkhorn,
    solve_sinkhorn_center,
)

__all__ = [
    "CostKind",
    "CostMatrix",
    "DiscreteMeasure",
    "DivergenceReport",
    "DualPotentials",
    "LipschitzCritic",
    "SampleBatch",
    "SinkhornDivergence",
    "SolveReport",
    "SolverConfig",
    "ToyGenerator",
    "TransportPlan",
    "WassersteinDistance",
    "pairwise_cost",
    "plan_gradient",
    "sinkhorn_divergence",
    "solve",
    "solve_fista",
    "solve_fista_center",
    "solve_pdhg",
    "solve_sinkhorn",
    "solve_sinkhorn_center",
    "transport_cost",
    "uniform_measure",
]
