import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from wdist.core import DualPotentials, TransportPlan, uniform_measure
from wdist.exceptions import Unsupported
from wdist.verification import (
    certify,
    exact_uniform_wasserstein,
    finite_difference_gradient,
    permutation_potentials,
)

# value of the seeded 5x5 fixture, computed with scipy's assignment solver
FIXTURE5_VALUE = 0.2030847760355859


def test_antidiagonal_cost():
    value, plan = exact_uniform_wasserstein(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert value == 0.0
    np.testing.assert_array_equal(plan.values, np.eye(2) / 2)


def test_constant_cost_breaks_ties_lexicographically():
    value, plan = exact_uniform_wasserstein(np.ones((3, 3)))
    assert value == pytest.approx(1.0)
    np.testing.assert_array_equal(plan.values, np.eye(3) / 3)


def test_frozen_fixture_value(fixture5):
    value, plan = exact_uniform_wasserstein(fixture5)
    assert value == pytest.approx(FIXTURE5_VALUE, abs=1e-15)
    assert list(np.argmax(plan.values, axis=1)) == [3, 1, 2, 0, 4]


def test_oracle_rejects_unsupported_sizes():
    with pytest.raises(Unsupported):
        exact_uniform_wasserstein(np.zeros((9, 9)))
    with pytest.raises(Unsupported):
        exact_uniform_wasserstein(np.zeros((2, 3)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_oracle_matches_assignment_solver(n, seed):
    C = np.random.default_rng(seed).random((n, n))
    value, plan = exact_uniform_wasserstein(C)
    r, c = linear_sum_assignment(C)
    assert value == pytest.approx(C[r, c].mean(), abs=1e-12)
    mu = uniform_measure(n)
    assert plan.marginal_residual(mu, mu) <= 1e-15


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_permutation_potentials_certify_optimality(n, seed):
    C = np.random.default_rng(seed).random((n, n))
    _, plan = exact_uniform_wasserstein(C)
    pot = permutation_potentials(C, plan)
    mu = uniform_measure(n)
    cert = certify(plan, pot, C, mu, mu)
    assert cert.gap <= 1e-9
    assert cert.max_dual_violation <= 1e-12


def test_suboptimal_plan_has_positive_gap():
    C = np.array([[0.0, 1.0], [1.0, 0.0]])
    mu = uniform_measure(2)
    pot = permutation_potentials(C, exact_uniform_wasserstein(C)[1])
    cert = certify(TransportPlan(np.full((2, 2), 0.25)), pot, C, mu, mu)
    assert cert.gap > 0.1


def test_infeasible_potentials_are_flagged():
    C = np.zeros((2, 2))
    mu = uniform_measure(2)
    cert = certify(TransportPlan(np.eye(2) / 2), DualPotentials([1.0, 0.0], [0.0, 0.0]), C, mu, mu)
    assert cert.max_dual_violation == pytest.approx(1.0)
    assert cert.gap == abs(cert.primal_value - cert.dual_value)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_weak_duality(n, seed):
    rng = np.random.default_rng(seed)
    C = rng.random((n, n))
    alpha = rng.random(n) - 0.5
    beta = np.min(C - alpha[:, None], axis=0)
    T = rng.random((n, n))
    # Sinkhorn-balance T into a coupling
    for _ in range(500):
        T *= (1.0 / n) / T.sum(axis=1, keepdims=True)
        T *= (1.0 / n) / T.sum(axis=0, keepdims=True)
    mu = uniform_measure(n)
    cert = certify(TransportPlan(T), DualPotentials(alpha, beta), C, mu, mu)
    assert cert.max_dual_violation <= 1e-12
    assert cert.dual_value <= cert.primal_value + 1e-9


def test_finite_difference_quadratic():
    x = np.array([0.3, -1.2, 2.0])
    g = finite_difference_gradient(lambda v: 0.5 * v @ v, x, step=1e-4)
    np.testing.assert_allclose(g, x, atol=1e-8)


def test_finite_difference_linear():
    c = np.array([1.5, -2.0, 0.25])
    g = finite_difference_gradient(lambda v: c @ v, np.zeros(3))
    np.testing.assert_allclose(g, c, atol=1e-9)


def test_finite_difference_rejects_bad_step():
    with pytest.raises(ValueError):
        finite_difference_gradient(lambda v: 0.0, np.zeros(1), step=0.0)
