import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wdist.core import (
    CostMatrix,
    DiscreteMeasure,
    DualPotentials,
    SampleBatch,
    SolveReport,
    SolverConfig,
    TransportPlan,
    check_problem,
    transport_cost,
    uniform_measure,
)
from wdist.exceptions import InvalidArgument


def test_uniform_measure_sums_to_one():
    for n in range(1, 30):
        assert abs(uniform_measure(n).weights.sum() - 1.0) <= 1e-12


@pytest.mark.parametrize("weights", [[0.5, 0.6], [-0.1, 1.1], [np.nan, 1.0], []])
def test_measure_rejects_bad_weights(weights):
    with pytest.raises(InvalidArgument):
        DiscreteMeasure(weights)


def test_arrays_are_copied_and_read_only():
    w = np.array([0.25, 0.75])
    mu = DiscreteMeasure(w)
    w[0] = 0.0
    assert mu.weights[0] == 0.25
    with pytest.raises(ValueError):
        mu.weights[0] = 1.0


def test_cost_matrix_validation():
    with pytest.raises(InvalidArgument):
        CostMatrix([[0.0, -1.0]])
    with pytest.raises(InvalidArgument):
        CostMatrix([[0.0, np.inf]])
    with pytest.raises(InvalidArgument):
        CostMatrix([1.0, 2.0])


def test_sample_batch_image_shape():
    batch = SampleBatch(np.zeros((3, 12)), image_shape=(2, 2, 3))
    assert batch.n == 3 and batch.d == 12
    with pytest.raises(InvalidArgument):
        SampleBatch(np.zeros((3, 12)), image_shape=(2, 2, 2))


def test_channel_major_images():
    rows = np.arange(12.0).reshape(1, 12)
    batch = SampleBatch(rows, image_shape=(2, 2, 3), channel_major=True)
    img = batch.images()[0]
    assert img.shape == (2, 2, 3)
    # pixel (0, 0) collects the first entry of each channel plane
    assert list(img[0, 0]) == [0.0, 4.0, 8.0]
    assert batch.take([0]).channel_major


def test_solver_config_validation():
    with pytest.raises(InvalidArgument):
        SolverConfig(epsilon=-1.0)
    with pytest.raises(InvalidArgument):
        SolverConfig(tol=0.0)
    with pytest.raises(InvalidArgument):
        SolverConfig(max_iter=0)
    cfg = SolverConfig().replace(epsilon=0.5)
    assert cfg.epsilon == 0.5 and cfg.max_iter == SolverConfig().max_iter


def test_check_problem_shape_mismatch():
    with pytest.raises(InvalidArgument):
        check_problem(np.zeros((2, 3)), uniform_measure(2), uniform_measure(2))


def test_transport_cost_independent_of_layout():
    rng = np.random.default_rng(0)
    T = rng.random((7, 5))
    C = rng.random((7, 5))
    assert transport_cost(T, C) == transport_cost(np.asfortranarray(T), np.asfortranarray(C))
    with pytest.raises(InvalidArgument):
        transport_cost(T, C.T)


def test_dual_value_and_report_dict():
    mu, nu = uniform_measure(2), uniform_measure(3)
    pot = DualPotentials([1.0, 3.0], [0.0, 3.0, 6.0])
    assert pot.value(mu, nu) == pytest.approx(5.0)
    rep = SolveReport(1.0, 2.0, 3, 0.0, True, history=((1, 0.0, 1.0),))
    assert rep.to_dict()["history"] == [[1, 0.0, 1.0]]


@settings(max_examples=50, deadline=None)
@given(
    arrays(np.float64, st.integers(1, 8), elements=st.floats(0.01, 10.0)),
    arrays(np.float64, st.integers(1, 8), elements=st.floats(0.01, 10.0)),
)
def test_independent_coupling_is_feasible(a, b):
    mu = DiscreteMeasure(a / a.sum()) if abs((a / a.sum()).sum() - 1) <= 1e-12 else None
    nu = DiscreteMeasure(b / b.sum()) if abs((b / b.sum()).sum() - 1) <= 1e-12 else None
    if mu is None or nu is None:
        return
    plan = TransportPlan(np.outer(mu.weights, nu.weights))
    assert plan.marginal_residual(mu, nu) <= 1e-12
