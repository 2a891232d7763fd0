import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wdist.core import SampleBatch
from wdist.costs import CostKind, gaussian_window, pairwise_cost
from wdist.exceptions import DegenerateInput, InvalidArgument
from wdist.rng import make_rng

# skimage.metrics.structural_similarity(a, b, gaussian_weights=True, sigma=1.5,
# use_sample_covariance=False, data_range=1.0) on the pair built in _ssim_pair
SSIM_FROZEN = 0.9518188223306736


def _ssim_pair():
    rng = make_rng(3, "ssim")
    a = rng.random((12, 13))
    b = np.clip(a + 0.1 * rng.standard_normal((12, 13)), 0.0, 1.0)
    return a, b


def _global_ssim(x, y):
    """SSIM over a single window covering the whole image, from the definition."""
    c1, c2 = 0.01**2, 0.03**2
    mx, my = x.mean(), y.mean()
    vx = ((x - mx) ** 2).mean()
    vy = ((y - my) ** 2).mean()
    cov = ((x - mx) * (y - my)).mean()
    return ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx**2 + my**2 + c1) * (vx + vy + c2))


def test_three_four_five():
    x, y = np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])
    assert pairwise_cost(x, y, "l2").values[0, 0] == pytest.approx(5.0)
    assert pairwise_cost(x, y, "l1").values[0, 0] == pytest.approx(7.0)
    assert pairwise_cost(x, y, "sql2").values[0, 0] == pytest.approx(25.0)


def test_orthogonal_cosine():
    C = pairwise_cost(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), CostKind.COSINE)
    assert C.values[0, 0] == pytest.approx(1.0)


def test_against_double_loop():
    rng = np.random.default_rng(1)
    X, Y = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    formulas = {
        "l1": lambda x, y: np.abs(x - y).sum(),
        "l2": lambda x, y: np.sqrt(((x - y) ** 2).sum()),
        "sql2": lambda x, y: ((x - y) ** 2).sum(),
        "cosine": lambda x, y: 1 - x @ y / np.sqrt((x @ x) * (y @ y)),
    }
    for kind, f in formulas.items():
        expected = np.array([[f(x, y) for y in Y] for x in X])
        np.testing.assert_allclose(pairwise_cost(X, Y, kind).values, expected, atol=1e-12)


@pytest.mark.parametrize("kind", ["l1", "l2", "sql2", "cosine"])
def test_zero_diagonal(kind):
    X = np.random.default_rng(2).random((6, 4)) + 0.1
    C = pairwise_cost(X, X, kind).values
    assert np.all(np.abs(np.diag(C)) <= 1e-12)
    assert np.all(C >= 0)


def test_ssim_zero_diagonal():
    X = SampleBatch(np.random.default_rng(3).random((3, 64)), image_shape=(8, 8, 1))
    assert np.abs(np.diag(pairwise_cost(X, X, "ssim").values)).max() <= 1e-12


def test_cosine_zero_row():
    with pytest.raises(DegenerateInput):
        pairwise_cost(np.zeros((1, 2)), np.ones((1, 2)), "cosine")


def test_dimension_mismatch():
    with pytest.raises(InvalidArgument):
        pairwise_cost(np.ones((2, 2)), np.ones((2, 3)), "l2")


def test_ssim_needs_shape():
    with pytest.raises(InvalidArgument):
        pairwise_cost(np.ones((2, 4)), np.ones((2, 4)), "ssim")


def test_unknown_kind():
    with pytest.raises(InvalidArgument):
        CostKind.parse("hamming")
    assert CostKind.parse("SQL2") is CostKind.SQUARED_L2


def test_ssim_small_image_matches_definition():
    rng = np.random.default_rng(5)
    x, y = rng.random((8, 8)), rng.random((8, 8))
    X = SampleBatch(x.reshape(1, -1), image_shape=(8, 8, 1))
    Y = SampleBatch(y.reshape(1, -1), image_shape=(8, 8, 1))
    assert pairwise_cost(X, Y, "ssim").values[0, 0] == pytest.approx(
        1 - _global_ssim(x, y), abs=1e-10)


def test_ssim_frozen_reference():
    a, b = _ssim_pair()
    X = SampleBatch(a.reshape(1, -1), image_shape=(12, 13, 1))
    Y = SampleBatch(b.reshape(1, -1), image_shape=(12, 13, 1))
    assert 1 - pairwise_cost(X, Y, "ssim").values[0, 0] == pytest.approx(SSIM_FROZEN, abs=1e-9)


def test_ssim_window_loop_oracle():
    a, b = _ssim_pair()
    w = gaussian_window()
    vals = []
    for i in range(a.shape[0] - 10):
        for j in range(a.shape[1] - 10):
            pa, pb = a[i:i + 11, j:j + 11], b[i:i + 11, j:j + 11]
            mx, my = (w * pa).sum(), (w * pb).sum()
            vx = (w * (pa - mx) ** 2).sum()
            vy = (w * (pb - my) ** 2).sum()
            cov = (w * (pa - mx) * (pb - my)).sum()
            c1, c2 = 0.01**2, 0.03**2
            vals.append(((2 * mx * my + c1) * (2 * cov + c2))
                        / ((mx**2 + my**2 + c1) * (vx + vy + c2)))
    X = SampleBatch(a.reshape(1, -1), image_shape=(12, 13, 1))
    Y = SampleBatch(b.reshape(1, -1), image_shape=(12, 13, 1))
    assert 1 - pairwise_cost(X, Y, "ssim").values[0, 0] == pytest.approx(np.mean(vals), abs=1e-10)


def test_ssim_channel_major_equivalent():
    rng = np.random.default_rng(6)
    imgs = rng.random((3, 12, 12, 3))
    inter = SampleBatch(imgs.reshape(3, -1), image_shape=(12, 12, 3))
    planar = SampleBatch(np.moveaxis(imgs, -1, 1).reshape(3, -1), image_shape=(12, 12, 3),
                         channel_major=True)
    np.testing.assert_allclose(pairwise_cost(inter, inter, "ssim").values,
                               pairwise_cost(planar, planar, "ssim").values, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 2), elements=st.floats(-10, 10)),
       arrays(np.float64, (4, 2), elements=st.floats(-10, 10)),
       st.sampled_from(["l1", "l2", "sql2"]))
def test_symmetric_and_nonnegative(X, Y, kind):
    C = pairwise_cost(X, Y, kind).values
    np.testing.assert_allclose(C, pairwise_cost(Y, X, kind).values.T, atol=1e-9)
    assert np.all(C >= 0)
