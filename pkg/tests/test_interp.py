import numpy as np
import pytest

from paracascade.fourier_core import Grid2D, inverse
from paracascade.interp import InterpolationError, SpectralInterpolator, direct_sum

from conftest import random_field


def test_direct_sum_matches_grid_values(grid32):
    f = random_field(grid32, 1)
    x1, x2 = grid32.x
    assert np.allclose(direct_sum(f, grid32, x1, x2).real, inverse(f).ravel(), atol=1e-13)


@pytest.mark.parametrize("method,order", [("nufft", 6), ("lagrange", 12)])
def test_interpolation_accuracy(grid32, method, order):
    f = random_field(grid32, 2, s=2.5) * grid32.dealias_mask
    rng = np.random.default_rng(0)
    y1, y2 = rng.uniform(0, 2 * np.pi, (2, 200))
    interp = SpectralInterpolator(grid32, method, oversample=8, order=order, tol=1e-6)
    v = interp(f, y1, y2)
    assert np.abs(v - direct_sum(f, grid32, y1, y2).real).max() < 1e-6
    assert interp.last_residual < 1e-6


def test_batched_shapes(grid32):
    f = np.stack([random_field(grid32, s) for s in range(3)])
    x1, x2 = grid32.x
    v = SpectralInterpolator(grid32)(f, x1 + 0.1, x2)
    assert v.shape == (3,) + grid32.shape


def test_insufficient_oversampling_raises():
    g = Grid2D(32)
    f = random_field(g, 3, s=1.1)
    interp = SpectralInterpolator(g, "lagrange", oversample=1, order=2, tol=1e-10)
    with pytest.raises(InterpolationError, match="insufficient oversampling"):
        interp(f, np.array([0.123, 1.7]), np.array([2.2, 0.4]))


def test_bad_method():
    with pytest.raises(ValueError):
        SpectralInterpolator(Grid2D(16), "cubic")
