"""Adam and full-batch critic training under three Lipschitz strategies.

``gp``
    soft constraint: subtract the two-sided gradient penalty.
``sn_layer``
    spectral normalization inside the forward pass; each step runs one
    warm-started power iteration per layer and divides the weight by the
    resulting sigma, which is treated as a constant in the backward pass.
``sn_project``
    hard constraint: after every Adam step project each weight back onto
    ``sigma <= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import InvalidArgument
from .critic import forward, interpolates, objective_gradients, penalty_gradients
from .spectral import PowerState, spectral_norm_matrix

MODES = ("gp", "sn_layer", "sn_project")
FINAL_POWER_ITERS = 200


@dataclass
class AdamState:
    """Adam moments for a list of parameter arrays.

    Defaults follow the usual WGAN-GP setting ``lr=1e-4, betas=(0.0, 0.9)``.
    """

    lr: float = 1e-4
    beta1: float = 0.0
    beta2: float = 0.9
    eps_hat: float = 1e-8
    step_count: int = 0
    first: list = field(default_factory=list)
    second: list = field(default_factory=list)

    def step(self, params, grads):
        """In-place descent step on ``params`` along ``grads``."""
        if not self.first:
            self.first = [np.zeros_like(p) for p in params]
            self.second = [np.zeros_like(p) for p in params]
        self.step_count += 1
        t = self.step_count
        for p, g, m, v in zip(params, grads, self.first, self.second):
            if m.shape != p.shape:
                raise InvalidArgument("Adam moment shapes do not match parameters")
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1**t)
            v_hat = v / (1 - self.beta2**t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps_hat)


def _normalized(net, iters):
    weights, sigmas = [], []
    for layer, state in zip(net.layers, net.power_states):
        sigma, W = spectral_norm_matrix(layer.weight, iters, state)
        weights.append(W)
        sigmas.append(sigma)
    return weights, sigmas


def fit_critic(net, X, Y, mode="sn_layer", adam=None, steps=1000, lam=1.0, n_points=None,
               seed=0, power_iters=1, record_every=10):
    """Maximize ``mean f(X) - mean f(Y)`` over the critic by full-batch Adam.

    ``net`` is trained in place. For ``sn_layer`` the final weights are
    divided by their (re-converged) spectral norms before returning, so the
    network afterwards is exactly the function whose estimate is reported.

    Returns ``(estimate, history)`` with ``history`` a list of
    ``(step, objective)`` pairs.
    """
    if mode not in MODES:
        raise InvalidArgument(f"mode must be one of {MODES}, got {mode!r}")
    X = np.asarray(getattr(X, "data", X), dtype=np.float64)
    Y = np.asarray(getattr(Y, "data", Y), dtype=np.float64)
    adam = adam or AdamState()
    n_points = n_points or max(len(X), len(Y))
    params = [l.weight for l in net.layers] + [l.bias for l in net.layers]
    L = len(net.layers)
    history = []

    for step in range(1, steps + 1):
        if mode == "sn_layer":
            weights, sigmas = _normalized(net, power_iters)
        else:
            weights, sigmas = net.weights(), [1.0] * L
        value, wg, bg = objective_gradients(net, X, Y, weights)
        wg = [-g for g in wg]
        bg = [-g for g in bg]
        if mode == "gp":
            pts = interpolates(X, Y, n_points, (seed, step))
            _, pg = penalty_gradients(net, pts, lam, weights)
            wg = [a + b for a, b in zip(wg, pg)]
        wg = [g / s for g, s in zip(wg, sigmas)]
        adam.step(params, wg + bg)

        if mode == "sn_project":
            for layer, state in zip(net.layers, net.power_states):
                sigma, _ = spectral_norm_matrix(layer.weight, power_iters, state)
                if sigma > 1.0:
                    layer.weight /= sigma
        if step % record_every == 0 or step == 1:
            history.append((step, value))

    if mode == "sn_layer":
        weights, _ = _normalized(net, FINAL_POWER_ITERS)
        for layer, W in zip(net.layers, weights):
            layer.weight[...] = W
    estimate = float(forward(net, X).mean() - forward(net, Y).mean())
    history.append((steps, estimate))
    return estimate, history


def fresh_power_states(net, seed=0):
    net.power_states = [
        PowerState.random(l.weight.shape[1], seed=(seed, k)) for k, l in enumerate(net.layers)
    ]


def toy_problem():
    """Two data points and two generated points in the plane.

    The data sit on the right of the origin and the generated points on the
    left, one unit apart, so the exact transport cost is 1.
    """
    X = np.array([[0.5, 0.5], [0.5, -0.5]])
    Y = np.array([[-0.5, 0.5], [-0.5, -0.5]])
    return X, Y
