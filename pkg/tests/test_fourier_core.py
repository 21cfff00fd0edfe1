import numpy as np
import pytest
from hypothesis import given, strategies as st

from paracascade.fourier_core import (Grid2D, GridMismatchError, PaddedProduct, biot_savart,
                                      curl, dealiased_product, derivative, divergence, forward,
                                      forward_real, fractional_velocity, inverse, inverse_real,
                                      l2_inner, l2_norm, laplacian, project_real, velocity)

from conftest import random_field, random_physical


@pytest.mark.parametrize("n", [8, 48, 100])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError, match="power of two"):
        Grid2D(n)


def test_lattice_symmetric_except_nyquist(grid32):
    m1, m2 = grid32.index
    inner = grid32.nyquist_free
    assert set(np.unique(-m1[inner])) == set(np.unique(m1[inner]))
    assert m1.min() == -16 and m1.max() == 15


def test_constant_field_maps_to_zero_mode(grid32):
    c = forward(np.full(grid32.shape, 3.5))
    assert c[0, 0] == pytest.approx(3.5)
    c[0, 0] = 0
    assert np.abs(c).max() < 1e-15


def test_cosine_amplitudes(grid32):
    x1, _ = grid32.x
    c = forward(np.cos(x1))
    assert c[1, 0] == pytest.approx(0.5)
    assert c[-1, 0] == pytest.approx(0.5)


def test_forward_rejects_non_finite(grid32):
    v = np.zeros(grid32.shape)
    v[3, 4] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        forward(v)


@given(st.integers(0, 2**32))
def test_roundtrip_and_parseval(seed):
    g = Grid2D(32)
    f = random_physical(g, seed)
    c = forward(f)
    assert np.linalg.norm(inverse(c) - f) <= 1e-12 * np.linalg.norm(f)
    assert l2_norm(c) == pytest.approx(np.sqrt(np.mean(f**2)), rel=1e-12)
    # Hermitian symmetry of a real field
    flip = c[(-np.arange(32)) % 32][:, (-np.arange(32)) % 32]
    assert np.allclose(c, np.conj(flip), atol=1e-15)


def test_real_transforms_match_complex(grid64):
    f = random_physical(grid64, 1)
    assert np.allclose(forward_real(f), forward(f), atol=1e-16)
    c = random_field(grid64, 2)
    assert np.allclose(inverse_real(c), inverse(c), atol=1e-13)
    assert np.allclose(project_real(c), c, atol=1e-15)


def test_derivative_examples(grid32):
    x1, x2 = grid32.x
    d = inverse(derivative(forward(np.cos(x1)), grid32, (1, 0)))
    assert np.abs(d + np.sin(x1)).max() < 1e-13
    assert np.abs(derivative(forward(np.full(grid32.shape, 2.0)), grid32, (1, 0))).max() == 0
    f = np.cos(2 * x1) * np.cos(2 * x2)
    assert np.abs(inverse(laplacian(forward(f), grid32)) + 8 * f).max() < 1e-12


def test_derivative_zeroes_nyquist_for_odd_orders(grid32):
    c = np.zeros(grid32.shape, complex)
    c[16, 3] = 1.0
    assert np.abs(derivative(c, grid32, (1, 0))).max() == 0
    assert np.abs(derivative(c, grid32, (2, 0))).max() > 0
    with pytest.raises(ValueError):
        derivative(c, grid32, (5, 4))


def test_biot_savart_shear(grid32):
    _, x2 = grid32.x
    u = inverse(biot_savart(forward(np.cos(x2)), grid32))
    assert np.abs(u[0] + np.sin(x2)).max() < 1e-13
    assert np.abs(u[1]).max() < 1e-13
    assert np.abs(biot_savart(np.zeros(grid32.shape, complex), grid32)).max() == 0


def test_biot_savart_rejects_mean(grid32):
    with pytest.raises(ValueError, match="vorticity must have zero mean on the torus"):
        biot_savart(forward(np.ones(grid32.shape)), grid32)


@given(st.integers(0, 2**32))
def test_biot_savart_curl_and_divergence(seed):
    g = Grid2D(32)
    w = random_field(g, seed)
    u = biot_savart(w, g)
    assert l2_norm(curl(u, g) - w) <= 1e-12 * l2_norm(w)
    assert np.abs(divergence(u, g)).max() <= 1e-12 * l2_norm(u)


def test_fractional_velocity_examples(grid32):
    _, x2 = grid32.x
    th = forward(np.cos(x2))
    for a in (2.0, 1.5):
        u = inverse(fractional_velocity(th, grid32, a))
        assert np.abs(u[0] + np.sin(x2)).max() < 1e-13
    c = np.zeros(grid32.shape, complex)
    c[2, 0] = c[-2, 0] = 0.5
    u = fractional_velocity(c, grid32, 1.5)
    assert np.abs(u[1][2, 0]) == pytest.approx(2.0 ** (1 - 1.5) * 0.5)
    with pytest.raises(ValueError):
        fractional_velocity(c, grid32, 2.5)


def test_fractional_alpha_two_matches_euler(grid64):
    w = random_field(grid64, 3)
    ref = biot_savart(w, grid64)
    assert l2_norm(fractional_velocity(w, grid64, 2.0) - ref) <= 1e-15 * l2_norm(ref)
    assert np.array_equal(velocity(w, grid64, 2.0), biot_savart(w, grid64))
    u = fractional_velocity(w, grid64, 1.7)
    assert np.abs(divergence(u, grid64)).max() <= 1e-12 * l2_norm(u)


def test_l2_inner_examples(grid32):
    x1, _ = grid32.x
    c, s = forward(np.cos(x1)), forward(np.sin(x1))
    assert abs(l2_inner(c, s)) < 1e-16
    assert l2_inner(c, c) == pytest.approx(l2_norm(c) ** 2)
    f, g = random_physical(grid32, 4), random_physical(grid32, 5)
    assert l2_inner(forward(f), forward(g)) == pytest.approx(np.mean(f * g), rel=1e-12)
    with pytest.raises(GridMismatchError):
        l2_inner(c, np.zeros((16, 16)))


def test_padded_product_is_alias_free(grid32):
    f, g = random_field(grid32, 6), random_field(grid32, 7)
    pp = PaddedProduct(grid32)
    exact = pp(f, g)
    masked = dealiased_product(f, g, grid32)
    # products of 2/3-box fields computed on the padded grid agree with the truncated one
    fm, gm = f * grid32.dealias_mask, g * grid32.dealias_mask
    assert np.allclose(pp(fm, gm) * grid32.dealias_mask,
                       dealiased_product(fm, gm, grid32) * grid32.dealias_mask, atol=1e-15)
    assert exact.shape == masked.shape == grid32.shape
