"""Small fully connected critics with analytic gradients.

Only piecewise-linear activations are supported. That keeps the input
gradient a product of matrices whose activation masks are locally constant,
so the gradient penalty can be differentiated with respect to the weights
in closed form (almost everywhere) without a general autodiff engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import InvalidArgument
from ..rng import make_rng
from .spectral import PowerState, spectral_norm_matrix

LEAKY_SLOPE = 0.2
ACTIVATIONS = ("leaky_relu", "relu", "identity")


def _act(name, z):
    if name == "leaky_relu":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    if name == "relu":
        return np.maximum(z, 0.0)
    return z


def _act_grad(name, z):
    if name == "leaky_relu":
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    if name == "relu":
        return (z > 0).astype(np.float64)
    return np.ones_like(z)


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = "leaky_relu"

    def __post_init__(self):
        self.weight = np.array(self.weight, dtype=np.float64)
        self.bias = np.array(self.bias, dtype=np.float64).reshape(-1)
        if self.activation not in ACTIVATIONS:
            raise InvalidArgument(f"activation must be one of {ACTIVATIONS}")
        if self.weight.ndim != 2 or self.bias.size != self.weight.shape[0]:
            raise InvalidArgument("layer weight/bias shapes are inconsistent")


@dataclass
class MlpCritic:
    """``f(x) = act_L(W_L ... act_1(W_1 x + b_1) ... + b_L)`` with scalar output."""

    layers: list
    power_states: list = field(default_factory=list)

    def __post_init__(self):
        if not self.layers:
            raise InvalidArgument("a critic needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.weight.shape[0] != nxt.weight.shape[1]:
                raise InvalidArgument("consecutive layer dimensions do not match")
        if self.layers[-1].weight.shape[0] != 1:
            raise InvalidArgument("the last layer must have a single output")
        if not self.power_states:
            self.power_states = [
                PowerState.random(layer.weight.shape[1], seed=k) for k, layer in enumerate(self.layers)
            ]

    @classmethod
    def random(cls, sizes, seed=0, activation="leaky_relu", final_activation="identity",
               init="uniform"):
        """Random critic with layer ``sizes = [d, h1, ..., 1]``.

        ``init="uniform"`` draws weights and biases from ``U(-1/sqrt(fan_in),
        1/sqrt(fan_in))``; ``init="dcgan"`` draws weights from
        ``N(0, 0.02^2)`` with zero biases.
        """
        rng = make_rng(seed, "critic-init")
        layers = []
        for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            act = final_activation if k == len(sizes) - 2 else activation
            if init == "dcgan":
                W = rng.normal(0.0, 0.02, (fan_out, fan_in))
                b = np.zeros(fan_out)
            elif init == "uniform":
                bound = 1.0 / np.sqrt(fan_in)
                W = rng.uniform(-bound, bound, (fan_out, fan_in))
                b = rng.uniform(-bound, bound, fan_out)
            else:
                raise InvalidArgument(f"unknown init {init!r}")
            layers.append(Layer(W, b, act))
        return cls(layers)

    @property
    def input_dim(self):
        return self.layers[0].weight.shape[1]

    def copy(self):
        return MlpCritic(
            [Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers],
            [PowerState(s.u.copy()) for s in self.power_states],
        )

    def weights(self):
        return [l.weight for l in self.layers]

    def __call__(self, X):
        return forward(self, X)


def forward(net, X, weights=None):
    """Critic values for the rows of ``X``; returns shape ``(n,)``."""
    weights = net.weights() if weights is None else weights
    h = np.atleast_2d(np.asarray(X, dtype=np.float64))
    for layer, W in zip(net.layers, weights):
        h = _act(layer.activation, h @ W.T + layer.bias)
    return h[:, 0]


def _forward_cache(net, X, weights):
    h = np.atleast_2d(np.asarray(X, dtype=np.float64))
    inputs, masks = [], []
    for layer, W in zip(net.layers, weights):
        z = h @ W.T + layer.bias
        inputs.append(h)
        masks.append(_act_grad(layer.activation, z))
        h = _act(layer.activation, z)
    return h[:, 0], inputs, masks


def _backward(weights, masks, upstream):
    """Reverse pass; returns ``(input_grad, [delta_k])`` for upstream ``(n,)``."""
    delta = upstream[:, None]
    deltas = [None] * len(weights)
    for k in range(len(weights) - 1, -1, -1):
        delta = delta * masks[k]
        deltas[k] = delta
        delta = delta @ weights[k]
    return delta, deltas


def critic_value_and_gradient(net, x, weights=None):
    """``(f(x), grad_x f(x))`` for a single input vector."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != net.input_dim:
        raise InvalidArgument(f"input has dimension {x.shape[1]}, critic expects {net.input_dim}")
    values, grads = critic_values_and_gradients(net, x, weights)
    return float(values[0]), grads[0]


def critic_values_and_gradients(net, X, weights=None):
    """Batched values ``(n,)`` and input gradients ``(n, d)``."""
    weights = net.weights() if weights is None else weights
    values, _, masks = _forward_cache(net, X, weights)
    grads, _ = _backward(weights, masks, np.ones(values.shape[0]))
    return values, grads


def objective_gradients(net, X, Y, weights=None):
    """``mean f(X) - mean f(Y)`` and its gradients for each layer.

    Returns ``(value, weight_grads, bias_grads)``.
    """
    weights = net.weights() if weights is None else weights
    Z = np.vstack([X, Y])
    nx, ny = len(X), len(Y)
    upstream = np.concatenate([np.full(nx, 1.0 / nx), np.full(ny, -1.0 / ny)])
    values, inputs, masks = _forward_cache(net, Z, weights)
    _, deltas = _backward(weights, masks, upstream)
    wg = [d.T @ h for d, h in zip(deltas, inputs)]
    bg = [d.sum(axis=0) for d in deltas]
    return float(values[:nx].mean() - values[nx:].mean()), wg, bg


def interpolates(X, Y, n_points, seed):
    """Random points ``a y + (1 - a) x`` on segments between rows of ``X`` and ``Y``."""
    rng = make_rng(seed, "gradient-penalty")
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    i = rng.integers(0, len(X), n_points)
    j = rng.integers(0, len(Y), n_points)
    a = rng.random(n_points)[:, None]
    return a * X[i] + (1.0 - a) * Y[j]


def penalty_gradients(net, points, lam, weights=None):
    """Mean of ``lam (||grad f(p)|| - 1)^2`` over ``points`` and its weight gradients.

    With piecewise-linear activations ``grad f(p) = J^T`` with
    ``J = D_L W_L ... D_1 W_1`` and masks ``D_k`` locally constant, so
    ``dJ/dW_k = outer(P_k, Q_k)`` where ``P_k`` is the reverse product down
    to layer ``k`` and ``Q_k`` the forward Jacobian of the layer input. Bias
    gradients vanish almost everywhere.
    """
    weights = net.weights() if weights is None else weights
    values, inputs, masks = _forward_cache(net, points, weights)
    grads, deltas = _backward(weights, masks, np.ones(values.shape[0]))
    norms = np.linalg.norm(grads, axis=1)
    penalty = float(lam * np.mean((norms - 1.0) ** 2))

    safe = np.where(norms > 0, norms, 1.0)
    r = (2.0 * lam / len(points)) * ((norms - 1.0) / safe)[:, None] * grads
    wg = []
    # forward Jacobians of each layer input with respect to x, (n, in_k, d)
    Q = np.broadcast_to(np.eye(grads.shape[1]), (len(points),) + (grads.shape[1],) * 2)
    for k, W in enumerate(weights):
        Qr = np.einsum("pid,pd->pi", Q, r)
        wg.append(np.einsum("po,pi->oi", deltas[k], Qr))
        Q = masks[k][:, :, None] * np.einsum("oi,pid->pod", W, Q)
    return penalty, wg


def gradient_penalty(net, X, Y, lam, n_points, seed):
    """Two-sided penalty ``lam (||grad f(x)|| - 1)^2`` averaged over interpolates."""
    Xd = getattr(X, "data", X)
    Yd = getattr(Y, "data", Y)
    pts = interpolates(Xd, Yd, n_points, seed)
    _, grads = critic_values_and_gradients(net, pts)
    return float(lam * np.mean((np.linalg.norm(grads, axis=1) - 1.0) ** 2))


def lipschitz_upper_bound(net, iters=2000):
    """Product of per-layer spectral norms.

    Accepts an :class:`MlpCritic` or a sequence of linear operators (dense
    matrices or :class:`~wdist.lipschitz.spectral.ConvOperator`). Power
    iterations run from fresh states so the stored training states are left
    untouched.
    """
    from .spectral import ConvOperator, spectral_norm_conv

    items = net.weights() if isinstance(net, MlpCritic) else list(net)
    bound = 1.0
    for k, item in enumerate(items):
        if isinstance(item, ConvOperator):
            bound *= spectral_norm_conv(item, iters, PowerState.random(item.in_dim, seed=k))
        else:
            W = np.asarray(item, dtype=np.float64)
            bound *= spectral_norm_matrix(W, iters, PowerState.random(W.shape[1], seed=k))[0]
    return bound
