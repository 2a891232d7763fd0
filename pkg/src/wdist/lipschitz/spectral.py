"""Spectral norms of dense matrices and of convolution operators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import DegenerateInput, InvalidArgument
from ..rng import make_rng

MATERIALIZE_LIMIT = 4096


@dataclass
class PowerState:
    """Persistent unit vector of a power iteration.

    Reusing the same state across calls warm-starts the iteration, which is
    how a normalization layer amortizes the cost over training steps.
    """

    u: np.ndarray

    @classmethod
    def random(cls, dim, seed=0):
        u = make_rng(seed, "power").standard_normal(dim)
        return cls(u / np.linalg.norm(u))


def _power(apply, adjoint, state, iters):
    u = state.u
    for _ in range(int(iters)):
        v = adjoint(apply(u))
        norm = np.linalg.norm(v)
        if norm == 0:
            # u lies in the null space; restart from a fresh direction
            v = make_rng(u.size, "restart").standard_normal(u.size)
            norm = np.linalg.norm(v)
        u = v / norm
    state.u = u
    return float(np.linalg.norm(apply(u)))


def spectral_norm_matrix(W, iters=1, state=None):
    """Largest singular value of ``W`` by power iteration on ``W^T W``.

    Returns ``(sigma, W / sigma)``. ``state.u`` is updated in place so the
    next call continues from where this one stopped.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise InvalidArgument(f"expected a matrix, got shape {W.shape}")
    if not np.any(W):
        raise DegenerateInput("spectral normalization of a zero matrix")
    if state is None:
        state = PowerState.random(W.shape[1])
    sigma = _power(lambda u: W @ u, lambda v: W.T @ v, state, iters)
    return sigma, W / sigma


@dataclass(frozen=True)
class ConvOperator:
    """2-D cross-correlation with zero padding as a linear map.

    ``kernel`` has shape ``(out_channels, in_channels, kh, kw)`` and inputs
    have shape ``input_shape = (in_channels, h, w)``.
    """

    kernel: np.ndarray
    input_shape: tuple
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        k = np.array(self.kernel, dtype=np.float64)
        if k.ndim != 4:
            raise InvalidArgument(f"kernel must be 4-D, got shape {k.shape}")
        shape = tuple(int(s) for s in self.input_shape)
        if len(shape) != 3 or shape[0] != k.shape[1]:
            raise InvalidArgument(f"input_shape {shape} incompatible with kernel {k.shape}")
        if self.stride < 1 or self.padding < 0:
            raise InvalidArgument("stride must be >= 1 and padding >= 0")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "input_shape", shape)
        if min(self.output_shape) < 1:
            raise InvalidArgument("kernel larger than padded input")

    @property
    def output_shape(self):
        _, h, w = self.input_shape
        o, _, kh, kw = self.kernel.shape
        oh = (h + 2 * self.padding - kh) // self.stride + 1
        ow = (w + 2 * self.padding - kw) // self.stride + 1
        return (o, oh, ow)

    @property
    def in_dim(self):
        return int(np.prod(self.input_shape))

    @property
    def out_dim(self):
        return int(np.prod(self.output_shape))

    def forward(self, x):
        """Apply to flattened inputs of shape ``(..., in_dim)``."""
        x = np.asarray(x, dtype=np.float64)
        lead = x.shape[:-1]
        x = x.reshape((-1,) + self.input_shape)
        p, s = self.padding, self.stride
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        _, kh, kw = self.kernel.shape[1:]
        win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
        _, oh, ow = self.output_shape
        win = win[:, :, : (oh - 1) * s + 1 : s, : (ow - 1) * s + 1 : s]
        y = np.einsum("bcyxij,ocij->boyx", win, self.kernel)
        return y.reshape(lead + (self.out_dim,))

    def adjoint(self, y):
        """Transpose map, from ``(..., out_dim)`` back to ``(..., in_dim)``."""
        y = np.asarray(y, dtype=np.float64)
        lead = y.shape[:-1]
        y = y.reshape((-1,) + self.output_shape)
        c, h, w = self.input_shape
        p, s = self.padding, self.stride
        _, oh, ow = self.output_shape
        _, _, kh, kw = self.kernel.shape
        xp = np.zeros((y.shape[0], c, h + 2 * p, w + 2 * p))
        for i in range(kh):
            for j in range(kw):
                contrib = np.einsum("boyx,oc->bcyx", y, self.kernel[:, :, i, j])
                xp[:, :, i : i + (oh - 1) * s + 1 : s, j : j + (ow - 1) * s + 1 : s] += contrib
        x = xp[:, :, p : p + h, p : p + w]
        return x.reshape(lead + (self.in_dim,))


def materialize_conv(op):
    """Dense ``(out_dim, in_dim)`` matrix of the operator, for small inputs."""
    if op.in_dim > MATERIALIZE_LIMIT:
        raise InvalidArgument(f"input dimension {op.in_dim} exceeds {MATERIALIZE_LIMIT}")
    return op.forward(np.eye(op.in_dim)).T


def spectral_norm_conv(op, iters=1, state=None):
    """Operator norm of a convolution by power iteration on ``A^T A``.

    Each step is one forward and one adjoint convolution, so the induced
    matrix is never formed.
    """
    if not np.any(op.kernel):
        raise DegenerateInput("spectral norm of a zero kernel")
    if state is None:
        state = PowerState.random(op.in_dim)
    return _power(op.forward, op.adjoint, state, iters)


def reshaped_kernel_norm(op, iters=1, state=None):
    """Spectral norm of the kernel reshaped to ``out x (in * kh * kw)``.

    This is the cheap surrogate used by matrix-style spectral normalization;
    it generally differs from the true operator norm.
    """
    W = op.kernel.reshape(op.kernel.shape[0], -1)
    sigma, _ = spectral_norm_matrix(W, iters, state)
    return sigma
