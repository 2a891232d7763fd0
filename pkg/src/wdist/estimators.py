"""Scikit-learn style wrappers around the solvers and trainers.

Estimators store constructor arguments untouched, validate inputs in
``fit`` and expose fitted state through attributes with a trailing
underscore, so they work with ``get_params``, ``set_params`` and ``clone``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin, clone
from sklearn.utils.validation import check_array, check_is_fitted

from .core import SampleBatch, SolverConfig, uniform_measure
from .costs import pairwise_cost
from .divergence import sinkhorn_divergence
from .exceptions import InvalidArgument
from .generative import TrainConfig, train_toy_generator
from .lipschitz.critic import MlpCritic
from .lipschitz.training import AdamState, fit_critic
from .rng import make_rng
from .solvers import solve


def _pair(X, Y):
    X = check_array(X, dtype=np.float64)
    Y = check_array(Y, dtype=np.float64)
    if X.shape[1] != Y.shape[1]:
        raise InvalidArgument(f"X has {X.shape[1]} features, Y has {Y.shape[1]}")
    return X, Y


class _SolverParams:
    def _solver_config(self):
        return SolverConfig(
            epsilon=self.epsilon,
            max_iter=self.max_iter,
            tol=self.tol,
            inner_iter=self.inner_iter,
            tau=self.tau,
            log_domain=self.log_domain,
        )


class WassersteinDistance(_SolverParams, TransformerMixin, BaseEstimator):
    """Transport distance between the rows of ``X`` and ``Y`` (uniform weights).

    Parameters
    ----------
    solver : {"pdhg", "sinkhorn", "sinkhorn_center", "fista", "fista_center"}
    cost : {"l1", "l2", "sql2", "cosine", "ssim"}
    epsilon, max_iter, tol, inner_iter, tau, log_domain
        Passed to :class:`~wdist.core.SolverConfig`.
    outer_iter : int, optional
        Outer steps of the centered solvers.

    Attributes
    ----------
    distance_ : float
        Transport cost ``<T, C>`` of the fitted plan.
    plan_ : TransportPlan
    potentials_ : DualPotentials or None
    report_ : SolveReport
    """

    def __init__(self, solver="pdhg", cost="sql2", epsilon=0.05, max_iter=10_000, tol=1e-9,
                 inner_iter=1, tau=1.0, log_domain=False, outer_iter=None):
        self.solver = solver
        self.cost = cost
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.tol = tol
        self.inner_iter = inner_iter
        self.tau = tau
        self.log_domain = log_domain
        self.outer_iter = outer_iter

    def fit(self, X, Y):
        X, Y = _pair(X, Y)
        C = pairwise_cost(X, Y, self.cost)
        self.plan_, self.potentials_, self.report_ = solve(
            C, uniform_measure(len(X)), uniform_measure(len(Y)),
            self.solver, self._solver_config(), self.outer_iter,
        )
        self.distance_ = self.report_.distance
        self.cost_ = C
        self.source_ = X
        self.target_ = Y
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Barycentric image ``len(X_fit) * T @ Y`` of the nearest fitted source row."""
        check_is_fitted(self, "plan_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise InvalidArgument(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        T = self.plan_.values
        images = (T @ self.target_) / T.sum(axis=1, keepdims=True)
        nearest = np.argmin(
            ((X[:, None, :] - self.source_[None, :, :]) ** 2).sum(axis=2), axis=1
        )
        return images[nearest]

    def score(self, X, Y):
        """Negative transport cost between ``X`` and ``Y``; the fit is left unchanged."""
        return -clone(self).fit(X, Y).distance_


class SinkhornDivergence(_SolverParams, BaseEstimator):
    """Debiased regularized distance ``2 W(X, Y) - W(X, X) - W(Y, Y)``.

    Attributes
    ----------
    value_ : float
    report_ : DivergenceReport
    """

    def __init__(self, solver="sinkhorn", cost="sql2", epsilon=0.05, max_iter=10_000,
                 tol=1e-9, inner_iter=1, tau=1.0, log_domain=False, outer_iter=None,
                 use_regularized=True):
        self.solver = solver
        self.cost = cost
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.tol = tol
        self.inner_iter = inner_iter
        self.tau = tau
        self.log_domain = log_domain
        self.outer_iter = outer_iter
        self.use_regularized = use_regularized

    def fit(self, X, Y):
        X, Y = _pair(X, Y)
        self.report_ = sinkhorn_divergence(
            SampleBatch(X), SampleBatch(Y), self.cost, self._solver_config(), self.solver,
            use_regularized=self.use_regularized, outer_iter=self.outer_iter,
        )
        self.value_ = self.report_.value
        self.n_features_in_ = X.shape[1]
        return self


class LipschitzCritic(BaseEstimator):
    """Critic network trained to separate ``X`` from ``Y`` under a Lipschitz constraint.

    Parameters
    ----------
    hidden : tuple of int
        Hidden layer widths.
    mode : {"gp", "sn_layer", "sn_project"}
    steps : int
        Full-batch Adam steps.
    lr, lam, activation, init, seed
        Learning rate, gradient penalty weight, hidden activation, weight
        initialization and seed.

    Attributes
    ----------
    critic_ : MlpCritic
    estimate_ : float
        Final ``mean f(X) - mean f(Y)``.
    history_ : list of (step, objective)
    """

    def __init__(self, hidden=(10, 10, 10, 10), mode="sn_layer", steps=1000, lr=1e-4, lam=1.0,
                 activation="relu", init="uniform", seed=0):
        self.hidden = hidden
        self.mode = mode
        self.steps = steps
        self.lr = lr
        self.lam = lam
        self.activation = activation
        self.init = init
        self.seed = seed

    def fit(self, X, Y):
        X, Y = _pair(X, Y)
        sizes = [X.shape[1], *self.hidden, 1]
        self.critic_ = MlpCritic.random(sizes, self.seed, self.activation, init=self.init)
        self.estimate_, self.history_ = fit_critic(
            self.critic_, X, Y, self.mode, AdamState(lr=self.lr), self.steps,
            lam=self.lam, seed=self.seed,
        )
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "critic_")
        X = check_array(X, dtype=np.float64)
        return self.critic_(X)


class ToyGenerator(BaseEstimator):
    """Generator fitted to a dataset by transport-cost descent.

    Parameters mirror :class:`~wdist.generative.TrainConfig`; ``epsilon``,
    ``max_iter``, ``tol`` and ``inner_iter`` configure the transport solver.

    Attributes
    ----------
    generator_ : GeneratorMlp
    loss_history_ : list of float
    """

    def __init__(self, epochs=500, batch=None, solver="sinkhorn", cost="sql2", epsilon=0.05,
                 max_iter=2000, tol=1e-6, inner_iter=1, outer_iter=None, hidden=500, z_dim=2,
                 lr=1e-4, seed=0, fixed_z=False):
        self.epochs = epochs
        self.batch = batch
        self.solver = solver
        self.cost = cost
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.tol = tol
        self.inner_iter = inner_iter
        self.outer_iter = outer_iter
        self.hidden = hidden
        self.z_dim = z_dim
        self.lr = lr
        self.seed = seed
        self.fixed_z = fixed_z

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        cfg = TrainConfig(
            epochs=self.epochs, batch=self.batch, solver=self.solver,
            solver_cfg=SolverConfig(epsilon=self.epsilon, max_iter=self.max_iter, tol=self.tol,
                                    inner_iter=self.inner_iter),
            outer_iter=self.outer_iter, cost=self.cost, hidden=self.hidden, z_dim=self.z_dim,
            lr=self.lr, seed=self.seed, fixed_z=self.fixed_z,
        )
        self.generator_, self.loss_history_ = train_toy_generator(SampleBatch(X), cfg)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, Z):
        """Generator outputs for latent codes ``Z``."""
        check_is_fitted(self, "generator_")
        return self.generator_(check_array(Z, dtype=np.float64))

    def sample(self, n, seed=0):
        """``n`` outputs for latent codes drawn uniformly from the unit cube."""
        check_is_fitted(self, "generator_")
        Z = make_rng(seed, "sample").random((int(n), self.generator_.z_dim))
        return self.generator_(Z)


__all__ = ["LipschitzCritic", "SinkhornDivergence", "ToyGenerator", "WassersteinDistance"]
