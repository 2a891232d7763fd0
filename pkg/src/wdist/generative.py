"""Full-batch generator training through fixed transport plans.

The generator is a one-hidden-layer perceptron ``g(z) = sigmoid(W2
leaky(W1 z + b1) + b2)``. Each epoch solves a transport problem between a
data batch and a generated batch, holds the plan fixed and descends
``<T, C(X, g(Z))>`` in the generator parameters, which by the envelope
theorem is the gradient of the transport cost itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import SampleBatch, SolverConfig, transport_cost, uniform_measure
from .costs import CostKind, pairwise_cost
from .divergence import plan_gradient
from .exceptions import InvalidArgument, WdistError
from .ingest import write_pgm
from .lipschitz.training import AdamState
from .rng import make_rng
from .solvers import canonical_solver, solve

LEAKY_SLOPE = 0.2


def _sigmoid(x):
    # split by sign so neither branch overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class GeneratorMlp:
    """Generator with a leaky-ReLU hidden layer and logistic outputs."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    image_shape: Optional[tuple] = None

    def __post_init__(self):
        self.W1 = np.array(self.W1, dtype=np.float64)
        self.b1 = np.array(self.b1, dtype=np.float64).reshape(-1)
        self.W2 = np.array(self.W2, dtype=np.float64)
        self.b2 = np.array(self.b2, dtype=np.float64).reshape(-1)
        hidden, _ = self.W1.shape
        if self.b1.size != hidden or self.W2.shape[1] != hidden or self.b2.size != self.W2.shape[0]:
            raise InvalidArgument("generator parameter shapes are inconsistent")

    @classmethod
    def random(cls, z_dim, hidden, out_dim, seed=0, image_shape=None):
        """Uniform ``+-1/sqrt(fan_in)`` initialization."""
        rng = make_rng(seed, "generator-init")
        b1_bound = 1.0 / np.sqrt(z_dim)
        b2_bound = 1.0 / np.sqrt(hidden)
        return cls(
            rng.uniform(-b1_bound, b1_bound, (hidden, z_dim)),
            rng.uniform(-b1_bound, b1_bound, hidden),
            rng.uniform(-b2_bound, b2_bound, (out_dim, hidden)),
            rng.uniform(-b2_bound, b2_bound, out_dim),
            image_shape,
        )

    @property
    def z_dim(self):
        return self.W1.shape[1]

    @property
    def out_dim(self):
        return self.W2.shape[0]

    def params(self):
        return [self.W1, self.b1, self.W2, self.b2]

    def _forward(self, Z):
        a = Z @ self.W1.T + self.b1
        h = np.where(a > 0, a, LEAKY_SLOPE * a)
        y = _sigmoid(h @ self.W2.T + self.b2)
        return a, h, y

    def __call__(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        if Z.shape[1] != self.z_dim:
            raise InvalidArgument(f"latent dimension {Z.shape[1]}, generator expects {self.z_dim}")
        return self._forward(Z)[2]

    def backward(self, Z, grad_y):
        """Parameter gradients of ``sum(grad_y * g(Z))``, ordered like :meth:`params`."""
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        a, h, y = self._forward(Z)
        d_out = grad_y * y * (1.0 - y)
        d_hidden = (d_out @ self.W2) * np.where(a > 0, 1.0, LEAKY_SLOPE)
        return [d_hidden.T @ Z, d_hidden.sum(axis=0), d_out.T @ h, d_out.sum(axis=0)]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of :func:`train_toy_generator`.

    ``batch=None`` uses the whole dataset every epoch. ``fixed_z`` keeps the
    first latent draw for all epochs instead of redrawing it.
    """

    epochs: int = 500
    batch: Optional[int] = None
    solver: str = "sinkhorn"
    solver_cfg: SolverConfig = field(
        default_factory=lambda: SolverConfig(epsilon=0.05, max_iter=2000, tol=1e-6)
    )
    outer_iter: Optional[int] = None
    cost: str = "sql2"
    hidden: int = 500
    z_dim: int = 2
    lr: float = 1e-4
    beta1: float = 0.0
    beta2: float = 0.9
    seed: int = 0
    fixed_z: bool = False

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise InvalidArgument("epochs must be a positive integer")
        if self.batch is not None and self.batch < 1:
            raise InvalidArgument("batch must be positive")
        if self.hidden < 1 or self.z_dim < 1:
            raise InvalidArgument("hidden and z_dim must be positive")
        canonical_solver(self.solver)
        CostKind.parse(self.cost)

    def to_dict(self):
        out = dict(self.__dict__)
        out["solver_cfg"] = dict(self.solver_cfg.__dict__)
        return out


def train_toy_generator(data, cfg=None, generator=None):
    """Fit a generator to ``data`` by descending the transport cost.

    Returns ``(generator, loss_history)`` where ``loss_history[e]`` is
    ``<T, C>`` at epoch ``e`` before that epoch's update. Solver failures are
    re-raised with the epoch index in the message.
    """
    cfg = cfg or TrainConfig()
    data = data if isinstance(data, SampleBatch) else SampleBatch(data)
    if np.any(data.data < 0) or np.any(data.data > 1):
        raise InvalidArgument("training data must lie in [0, 1]")
    batch = data.n if cfg.batch is None else int(cfg.batch)
    if batch > data.n:
        raise InvalidArgument(f"batch {batch} exceeds dataset size {data.n}")
    gen = generator or GeneratorMlp.random(
        cfg.z_dim, cfg.hidden, data.d, cfg.seed, data.image_shape
    )
    if gen.out_dim != data.d:
        raise InvalidArgument(f"generator emits {gen.out_dim} features, data has {data.d}")
    adam = AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2)
    weights = uniform_measure(batch)
    history = []

    for epoch in range(int(cfg.epochs)):
        draw = 0 if cfg.fixed_z else epoch
        Z = make_rng(cfg.seed, "latent", draw).random((batch, gen.z_dim))
        if batch == data.n:
            X = data
        else:
            X = data.take(make_rng(cfg.seed, "batch", epoch).permutation(data.n)[:batch])
        Y = SampleBatch(gen(Z), data.image_shape, data.channel_major)
        try:
            C = pairwise_cost(X, Y, cfg.cost)
            T, _, _ = solve(C, weights, weights, cfg.solver, cfg.solver_cfg, cfg.outer_iter)
            grad_y = plan_gradient(T, X, Y, cfg.cost)
        except WdistError as exc:
            raise type(exc)(f"epoch {epoch}: {exc}") from exc
        history.append(transport_cost(T, C))
        adam.step(gen.params(), gen.backward(Z, grad_y))
    return gen, history


def manifold_grid(g, steps):
    """Generator outputs on the uniform ``steps x steps`` latent grid.

    Row ``i * steps + j`` holds ``g(u_i, u_j)`` with ``u = linspace(0, 1,
    steps)``.
    """
    if g.z_dim != 2:
        raise InvalidArgument(f"manifold grid needs a 2-D latent space, got {g.z_dim}")
    if int(steps) != steps or steps < 1:
        raise InvalidArgument("steps must be a positive integer")
    u = np.linspace(0.0, 1.0, int(steps))
    Z = np.stack(np.meshgrid(u, u, indexing="ij"), axis=-1).reshape(-1, 2)
    return SampleBatch(g(Z), g.image_shape)


def tile_images(batch, steps):
    """Arrange ``steps**2`` single-channel images into one 2-D mosaic."""
    if batch.image_shape is None or batch.image_shape[2] != 1:
        raise InvalidArgument("tiling needs single-channel images")
    if batch.n != steps * steps:
        raise InvalidArgument(f"expected {steps * steps} images, got {batch.n}")
    h, w, _ = batch.image_shape
    grid = batch.data.reshape(steps, steps, h, w)
    return grid.transpose(0, 2, 1, 3).reshape(steps * h, steps * w)


def write_manifold(path, g, steps):
    """Write the latent-grid mosaic of ``g`` as a binary PGM."""
    write_pgm(path, tile_images(manifold_grid(g, steps), steps))
