"""Value types shared by the transport solvers.

Every array held by these types is copied on construction and flagged
read-only, so instances can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import InvalidArgument

MASS_TOL = 1e-12


def _frozen(values, ndim, name, dtype=np.float64):
    arr = np.array(values, dtype=dtype, copy=True, order="C")
    if arr.ndim != ndim:
        raise InvalidArgument(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability weights on a finite set of atoms."""

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights, 1, "weights")
        if w.size == 0:
            raise InvalidArgument("a measure needs at least one atom")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidArgument("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise InvalidArgument(f"weights sum to {w.sum()!r}, expected 1")
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Samples stored as rows of an ``(n, d)`` matrix.

    ``image_shape`` is ``(height, width, channels)`` when rows are flattened
    images; its product must equal ``d``. Rows are pixel-interleaved unless
    ``channel_major`` is set, in which case each row stores whole channel
    planes one after another.
    """

    data: np.ndarray
    image_shape: Optional[tuple] = None
    channel_major: bool = False

    def __post_init__(self):
        x = _frozen(self.data, 2, "data")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise InvalidArgument(f"empty sample batch of shape {x.shape}")
        if self.image_shape is not None:
            shape = tuple(int(s) for s in self.image_shape)
            if len(shape) != 3 or int(np.prod(shape)) != x.shape[1]:
                raise InvalidArgument(
                    f"image_shape {shape} does not factor feature dimension {x.shape[1]}"
                )
            object.__setattr__(self, "image_shape", shape)
        object.__setattr__(self, "data", x)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def d(self):
        return self.data.shape[1]

    def take(self, idx):
        return SampleBatch(self.data[np.asarray(idx)], self.image_shape, self.channel_major)

    def images(self):
        """Rows reshaped to ``(n, height, width, channels)``."""
        if self.image_shape is None:
            raise InvalidArgument("batch carries no image_shape")
        h, w, c = self.image_shape
        if self.channel_major:
            return np.moveaxis(self.data.reshape(-1, c, h, w), 1, -1)
        return self.data.reshape(-1, h, w, c)


@dataclass(frozen=True, eq=False)
class CostMatrix:
    values: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        c = _frozen(self.values, 2, "cost")
        if not np.all(np.isfinite(c)):
            raise InvalidArgument("cost entries must be finite")
        if np.any(c < 0):
            raise InvalidArgument("cost entries must be nonnegative")
        object.__setattr__(self, "values", c)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class TransportPlan:
    values: np.ndarray

    def __post_init__(self):
        t = _frozen(self.values, 2, "plan")
        if np.any(t < 0):
            raise InvalidArgument("plan entries must be nonnegative")
        object.__setattr__(self, "values", t)

    @property
    def shape(self):
        return self.values.shape

    def marginal_residual(self, mu, nu):
        """Largest absolute violation of the row and column constraints."""
        r = np.abs(self.values.sum(axis=1) - mu.weights).max()
        c = np.abs(self.values.sum(axis=0) - nu.weights).max()
        return float(max(r, c))


@dataclass(frozen=True, eq=False)
class DualPotentials:
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", _frozen(self.alpha, 1, "alpha"))
        object.__setattr__(self, "beta", _frozen(self.beta, 1, "beta"))

    def value(self, mu, nu):
        return float(self.alpha @ mu.weights + self.beta @ nu.weights)


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters shared by every solver.

    ``epsilon`` is in cost units. ``inner_iter`` only matters for the
    centered solvers, ``tau`` only for PDHG and ``log_domain`` only for the
    entropic solvers.
    """

    epsilon: float = 0.05
    max_iter: int = 10_000
    tol: float = 1e-9
    inner_iter: int = 1
    tau: float = 1.0
    log_domain: bool = False

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise InvalidArgument(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.tol > 0:
            raise InvalidArgument(f"tol must be > 0, got {self.tol}")
        if not self.tau > 0:
            raise InvalidArgument(f"tau must be > 0, got {self.tau}")
        if int(self.max_iter) < 1 or int(self.inner_iter) < 1:
            raise InvalidArgument("max_iter and inner_iter must be positive")

    def replace(self, **changes):
        params = dict(self.__dict__)
        params.update(changes)
        return SolverConfig(**params)


@dataclass(frozen=True)
class SolveReport:
    """Summary of one solver run.

    ``history`` holds ``(iteration, residual, objective)`` triples in
    increasing iteration order. ``info`` carries solver-specific notes such as
    the interpretation choices in effect.
    """

    distance: float
    regularized_objective: float
    iterations: int
    marginal_residual: float
    converged: bool
    history: tuple = ()
    info: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "distance": self.distance,
            "regularized_objective": self.regularized_objective,
            "iterations": self.iterations,
            "marginal_residual": self.marginal_residual,
            "converged": self.converged,
            "history": [list(h) for h in self.history],
            "info": dict(self.info),
        }


def uniform_measure(n):
    """Uniform weights ``1/n`` on ``n`` atoms."""
    if int(n) != n or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    return DiscreteMeasure(np.full(int(n), 1.0 / n))


def as_measure(weights):
    if isinstance(weights, DiscreteMeasure):
        return weights
    return DiscreteMeasure(weights)


def as_cost(C):
    if isinstance(C, CostMatrix):
        return C
    return CostMatrix(C)


def transport_cost(T, C):
    """Frobenius inner product ``<T, C>``.

    The elementwise product is reduced over a C-ordered buffer so the result
    does not depend on the memory layout of the inputs.
    """
    t = T.values if isinstance(T, TransportPlan) else np.asarray(T, dtype=np.float64)
    c = C.values if isinstance(C, CostMatrix) else np.asarray(C, dtype=np.float64)
    if t.shape != c.shape:
        raise InvalidArgument(f"plan shape {t.shape} does not match cost shape {c.shape}")
    return float(np.sum(np.ascontiguousarray(t * c).ravel()))


def check_problem(C, mu, nu):
    """Coerce and validate a (cost, source, target) triple."""
    C = as_cost(C)
    mu = as_measure(mu)
    nu = as_measure(nu)
    if C.shape != (len(mu), len(nu)):
        raise InvalidArgument(
            f"cost shape {C.shape} does not match measures ({len(mu)}, {len(nu)})"
        )
    return C, mu, nu
