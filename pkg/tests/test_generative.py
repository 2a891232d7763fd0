import numpy as np
import pytest

from wdist.core import SampleBatch, SolverConfig
from wdist.exceptions import InvalidArgument
from wdist.generative import (
    GeneratorMlp,
    TrainConfig,
    manifold_grid,
    tile_images,
    train_toy_generator,
    write_manifold,
)
from wdist.ingest import read_pgm
from wdist.verification import finite_difference_gradient

POINT = np.array([0.3, 0.7])


@pytest.mark.parametrize("solver", ["pdhg", "sinkhorn", "sinkhorn_center", "fista",
                                    "fista_center"])
def test_single_point_dataset(solver):
    cfg = TrainConfig(
        epochs=600, hidden=32, lr=1e-2, solver=solver, outer_iter=5,
        solver_cfg=SolverConfig(epsilon=0.05, max_iter=2000, tol=1e-6, inner_iter=200),
    )
    g, history = train_toy_generator(np.tile(POINT, (16, 1)), cfg)
    assert history[-1] <= 1e-3 * history[0]
    out = g(np.random.default_rng(0).random((50, 2)))
    assert np.abs(out - POINT).max() < 0.02


def test_history_bit_identical():
    data = np.random.default_rng(1).random((20, 2))
    cfg = TrainConfig(epochs=30, hidden=16, batch=10)
    _, h1 = train_toy_generator(data, cfg)
    _, h2 = train_toy_generator(data, cfg)
    assert np.array(h1).tobytes() == np.array(h2).tobytes()


def test_rejects_out_of_range_data():
    with pytest.raises(InvalidArgument):
        train_toy_generator(np.full((4, 2), 2.0), TrainConfig(epochs=1))
    with pytest.raises(InvalidArgument):
        train_toy_generator(np.full((4, 2), 0.5), TrainConfig(epochs=1, batch=5))


def test_solver_errors_carry_epoch():
    data = SampleBatch(np.full((2, 4), 0.5), image_shape=(2, 2, 1))
    with pytest.raises(Exception, match="epoch 0"):
        train_toy_generator(data, TrainConfig(epochs=1, hidden=4, cost="ssim"))


def test_outputs_in_unit_interval():
    g = GeneratorMlp.random(2, 8, 5, seed=2)
    y = g(np.random.default_rng(2).normal(size=(40, 2)) * 50)
    assert np.all((y >= 0) & (y <= 1))


def test_backward_finite_differences():
    rng = np.random.default_rng(3)
    g = GeneratorMlp.random(2, 6, 3, seed=3)
    Z, G = rng.random((5, 2)), rng.normal(size=(5, 3))
    grads = g.backward(Z, G)
    for k, p in enumerate(g.params()):
        orig = p.copy()

        def f(flat):
            p[...] = flat.reshape(p.shape)
            return float(np.sum(G * g(Z)))

        fd = finite_difference_gradient(f, orig.ravel().copy()).reshape(p.shape)
        p[...] = orig
        np.testing.assert_allclose(grads[k], fd, atol=1e-7)


def test_grid_single_step():
    g = GeneratorMlp.random(2, 4, 3, seed=4)
    np.testing.assert_allclose(manifold_grid(g, 1).data, g(np.zeros((1, 2))), atol=1e-15)


def test_grid_corners():
    g = GeneratorMlp.random(2, 4, 3, seed=5)
    grid = manifold_grid(g, 3).data
    assert grid.shape == (9, 3)
    for idx, z in [(0, (0, 0)), (2, (0, 1)), (6, (1, 0)), (8, (1, 1))]:
        np.testing.assert_allclose(grid[idx], g(np.array([z], dtype=float))[0], atol=1e-15)


def test_grid_needs_two_latents():
    with pytest.raises(InvalidArgument):
        manifold_grid(GeneratorMlp.random(3, 4, 2), 2)


def test_tile_layout():
    batch = SampleBatch(np.arange(16).reshape(4, 4) / 15.0, image_shape=(2, 2, 1))
    mosaic = tile_images(batch, 2)
    np.testing.assert_array_equal(mosaic[:2, :2], batch.data[0].reshape(2, 2))
    np.testing.assert_array_equal(mosaic[:2, 2:], batch.data[1].reshape(2, 2))
    np.testing.assert_array_equal(mosaic[2:, :2], batch.data[2].reshape(2, 2))


def test_write_manifold(tmp_path):
    g = GeneratorMlp.random(2, 4, 6, seed=6, image_shape=(2, 3, 1))
    write_manifold(tmp_path / "m.pgm", g, 4)
    assert read_pgm(tmp_path / "m.pgm").shape == (8, 12)
