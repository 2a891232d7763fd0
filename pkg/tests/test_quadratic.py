import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wdist.core import SolverConfig, uniform_measure
from wdist.exceptions import InvalidArgument
from wdist.solvers.quadratic import (
    FistaState,
    _fista,
    _new_state,
    dual_gradient,
    dual_objective,
    primal_objective,
    solve_fista,
    solve_fista_center,
)
from wdist.verification import exact_uniform_wasserstein, finite_difference_gradient

from conftest import measures, uniform_instances


def test_momentum_coefficient():
    state = FistaState(np.zeros(1), np.zeros(1), np.zeros(1), np.zeros(1), 1.0)
    for k in range(1, 20):
        state.k = k
        assert state.momentum() == (k - 1) / (k + 2)


def test_step_bound(fixture5):
    mu, nu = measures(fixture5)
    _, _, report = solve_fista(fixture5, mu, nu, SolverConfig(epsilon=0.2, max_iter=5))
    assert report.info["step_bound"] == pytest.approx(10 / 0.2)


def test_rejects_zero_epsilon():
    with pytest.raises(InvalidArgument):
        solve_fista(np.zeros((2, 2)), uniform_measure(2), uniform_measure(2),
                    SolverConfig(epsilon=0.0))


def test_strong_duality_on_fixture(fixture5):
    mu, nu = measures(fixture5)
    plan, pot, report = solve_fista(fixture5, mu, nu, SolverConfig(epsilon=0.1, tol=1e-9,
                                                                    max_iter=100_000))
    assert report.converged
    assert abs(report.info["dual_objective"] - report.regularized_objective) <= 1e-8
    assert plan.marginal_residual(mu, nu) <= 1e-9


def _smooth_point(rng, C, eps, center=None):
    n, m = C.shape
    while True:
        alpha = rng.uniform(-0.5, 1.0, n)
        beta = rng.uniform(-0.5, 1.0, m)
        x = alpha[:, None] + beta[None, :] - C
        hinge = x if center is None else center * eps + x
        if np.min(np.abs(hinge)) >= 1e-4:
            return alpha, beta


@pytest.mark.parametrize("centered", [False, True])
def test_gradient_matches_finite_differences(centered):
    rng = np.random.default_rng(4)
    for _ in range(10):
        C = rng.random((4, 3))
        mu, nu = np.full(4, 0.25), np.full(3, 1 / 3)
        eps = 0.3
        center = rng.random((4, 3)) * 0.2 if centered else None
        alpha, beta = _smooth_point(rng, C, eps, center)
        ga, gb = dual_gradient(alpha, beta, C, mu, nu, eps, center)

        def f(v):
            return dual_objective(v[:4], v[4:], C, mu, nu, eps, center)

        fd = finite_difference_gradient(f, np.concatenate([alpha, beta]), step=1e-6)
        analytic = np.concatenate([ga, gb])
        assert np.abs(fd - analytic).max() <= 1e-5 * max(1.0, np.abs(analytic).max())


def test_sparsity_at_moderate_epsilon():
    rng = np.random.default_rng(8)
    for _ in range(10):
        C = rng.random((5, 5))
        mu = uniform_measure(5)
        eps = 0.1 * C.mean()
        plan, _, _ = solve_fista(C, mu, mu, SolverConfig(epsilon=eps, tol=1e-8, max_iter=50_000))
        assert np.any(plan.values == 0.0)


def test_inner_residual_decreases():
    for C in uniform_instances(10, seed=9):
        mu, nu = measures(C)
        state = _new_state(*C.shape, 0.5)
        last, first = _fista(C, mu.weights, nu.weights, 0.5, None, 300, 1e-12, state)
        assert last <= first


def test_center_single_outer_equals_fista(fixture5):
    mu, nu = measures(fixture5)
    cfg = SolverConfig(epsilon=0.3, inner_iter=400, max_iter=400, tol=1e-14)
    p1, _, _ = solve_fista_center(fixture5, mu, nu, cfg, 1)
    p2, _, _ = solve_fista(fixture5, mu, nu, cfg)
    np.testing.assert_allclose(p1.values, p2.values, atol=1e-14)


def test_center_improves_heavy_smoothing(fixture5):
    mu, nu = measures(fixture5)
    oracle = exact_uniform_wasserstein(fixture5)[0]
    cfg = SolverConfig(epsilon=10.0, inner_iter=1000, max_iter=1000, tol=1e-10)
    _, _, centered = solve_fista_center(fixture5, mu, nu, cfg, 10)
    _, _, plain = solve_fista(fixture5, mu, nu, cfg)
    assert abs(centered.distance - oracle) < abs(plain.distance - oracle)


def test_center_costs_non_increasing():
    for C in uniform_instances(20, seed=10):
        mu, nu = measures(C)
        _, _, report = solve_fista_center(C, mu, nu, SolverConfig(epsilon=1.0, inner_iter=1000,
                                                                  tol=1e-10), 10)
        costs = [h[2] for h in report.history[1:]]
        assert all(b <= a + 1e-8 for a, b in zip(costs, costs[1:]))


def test_literal_center_update_differs(fixture5):
    mu, nu = measures(fixture5)
    cfg = SolverConfig(epsilon=1.0, inner_iter=500, tol=1e-10)
    p1, _, r1 = solve_fista_center(fixture5, mu, nu, cfg, 5)
    p2, _, r2 = solve_fista_center(fixture5, mu, nu, cfg, 5, literal_center_update=True)
    assert r1.info["center_update"] == "proximal" and r2.info["center_update"] == "literal"
    assert not np.allclose(p1.values, p2.values)


def test_centered_strong_duality(fixture5):
    mu, nu = measures(fixture5)
    cfg = SolverConfig(epsilon=1.0, inner_iter=20_000, tol=1e-10)
    _, _, report = solve_fista_center(fixture5, mu, nu, cfg, 3)
    assert abs(report.info["dual_objective"] - report.regularized_objective) <= 1e-7


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_plan_nonnegative(n, m, seed):
    C = np.random.default_rng(seed).random((n, m))
    mu, nu = uniform_measure(n), uniform_measure(m)
    plan, _, report = solve_fista(C, mu, nu, SolverConfig(epsilon=0.5, max_iter=300))
    assert np.all(plan.values >= 0)
    assert report.regularized_objective == pytest.approx(primal_objective(plan.values, C, 0.5))
