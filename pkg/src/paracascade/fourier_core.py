"""Periodic grid, Fourier transforms and the velocity inversions.

Fields live on the torus ``[0, L)^2`` sampled on an ``n x n`` grid.  Array
axis 0 is ``x1`` and axis 1 is ``x2``.  Spectral coefficients are stored in
numpy FFT order and normalized as Fourier-series amplitudes, so the constant
field ``c`` has coefficient ``c`` at ``k = (0, 0)``.

All ``L^2`` quantities use the normalized measure ``dx / L^2``; with this
choice Parseval reads ``mean(|f|^2) == sum(|fhat|^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid with ``n`` points per axis and period ``L``."""

    n: int
    L: float = 2 * np.pi

    def __post_init__(self):
        n = int(self.n)
        if n < 16 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 16, got {self.n}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", float(self.L))

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def dx(self):
        return self.L / self.n

    @cached_property
    def x(self):
        """Physical coordinates ``(x1, x2)``, each of shape ``(n, n)``."""
        s = np.arange(self.n) * self.dx
        return np.meshgrid(s, s, indexing="ij")

    @cached_property
    def index(self):
        """Integer wavenumber indices in ``[-n/2, n/2)`` along each axis."""
        m = np.fft.fftfreq(self.n, 1.0 / self.n)
        return np.meshgrid(m, m, indexing="ij")

    @cached_property
    def k(self):
        """Physical wavenumbers ``(k1, k2)`` scaled by ``2 pi / L``."""
        scale = 2 * np.pi / self.L
        m1, m2 = self.index
        return m1 * scale, m2 * scale

    @cached_property
    def kmag(self):
        k1, k2 = self.k
        return np.hypot(k1, k2)

    @cached_property
    def nyquist_free(self):
        """Mask that is False on the Nyquist row and column."""
        m1, m2 = self.index
        h = self.n // 2
        return (np.abs(m1) != h) & (np.abs(m2) != h)

    @cached_property
    def dealias_mask(self):
        """Two-thirds rule: keep modes with ``|m_i| <= n/3`` on both axes."""
        m1, m2 = self.index
        cut = self.n / 3.0
        return (np.abs(m1) <= cut) & (np.abs(m2) <= cut)

    @cached_property
    def kmax_resolved(self):
        """Largest radius fully resolved by the dealiased lattice."""
        return (self.n / 3.0) * 2 * np.pi / self.L

    def check(self, *arrays):
        for a in arrays:
            if np.shape(a)[-2:] != self.shape:
                raise GridMismatchError(
                    f"array of shape {np.shape(a)} does not match grid {self.shape}"
                )


def forward(values, grid: Grid2D | None = None):
    """Physical samples -> Fourier-series coefficients (last two axes)."""
    values = np.asarray(values)
    if grid is not None:
        grid.check(values)
    if not np.all(np.isfinite(values)):
        raise ValueError("field contains non-finite values")
    n1, n2 = values.shape[-2:]
    return sfft.fft2(values, axes=(-2, -1)) / (n1 * n2)


def inverse(coeffs, real=True):
    """Fourier-series coefficients -> physical samples."""
    coeffs = np.asarray(coeffs)
    n1, n2 = coeffs.shape[-2:]
    out = sfft.ifft2(coeffs, axes=(-2, -1)) * (n1 * n2)
    return out.real if real else out


def inverse_real(coeffs):
    """Fast :func:`inverse` for Hermitian coefficients (real fields)."""
    coeffs = np.asarray(coeffs)
    n1, n2 = coeffs.shape[-2:]
    return sfft.irfft2(coeffs[..., : n2 // 2 + 1], s=(n1, n2), axes=(-2, -1)) * (n1 * n2)


def forward_real(values):
    """Fast :func:`forward` for real samples; returns the full coefficient array."""
    values = np.asarray(values, dtype=float)
    n1, n2 = values.shape[-2:]
    half = sfft.rfft2(values, axes=(-2, -1)) / (n1 * n2)
    out = np.empty(values.shape[:-2] + (n1, n2), dtype=complex)
    h = n2 // 2 + 1
    out[..., :h] = half
    # Hermitian completion: c(-k) = conj c(k)
    i1 = (-np.arange(n1)) % n1
    i2 = (-np.arange(h, n2)) % n2
    out[..., h:] = np.conj(half[..., i1[:, None], i2[None, :]])
    return out


def project_real(coeffs):
    """Hermitian projection: coefficients of the real part of the field."""
    return forward(inverse(coeffs, real=True))


def derivative(fhat, grid: Grid2D, order=(1, 0)):
    """Multiply by ``(i k1)^a (i k2)^b``.  Nyquist modes are zeroed for odd orders."""
    a, b = (int(o) for o in order)
    if a < 0 or b < 0 or a + b > 8:
        raise ValueError(f"derivative order must be non-negative with total <= 8, got {order}")
    grid.check(fhat)
    k1, k2 = grid.k
    out = fhat * (1j * k1) ** a * (1j * k2) ** b
    if (a % 2) or (b % 2):
        out = out * grid.nyquist_free
    return out


def laplacian(fhat, grid: Grid2D):
    grid.check(fhat)
    return -grid.kmag**2 * fhat


def _check_zero_mean(fhat, what="vorticity"):
    norm = np.sqrt(np.sum(np.abs(fhat) ** 2))
    if abs(fhat[..., 0, 0]) > 1e-12 * max(norm, np.finfo(float).tiny):
        raise ValueError(f"{what} must have zero mean on the torus")


def _perp_gradient(psi_hat, grid):
    k1, k2 = grid.k
    mask = grid.nyquist_free
    u1 = -1j * k2 * psi_hat * mask
    u2 = 1j * k1 * psi_hat * mask
    return np.stack([u1, u2])


def biot_savart(omega_hat, grid: Grid2D):
    """Velocity ``u = perp-grad psi`` with ``lap psi = omega`` and zero-mean ``psi``.

    Returns an array of shape ``(2, n, n)`` holding the spectral components.
    """
    grid.check(omega_hat)
    _check_zero_mean(omega_hat)
    k2 = grid.kmag**2
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    return _perp_gradient(-omega_hat * inv, grid)


def fractional_velocity(theta_hat, grid: Grid2D, alpha):
    """gSQG velocity with stream function ``-(-lap)^(-alpha/2) theta``.

    The sign is chosen so that ``alpha == 2`` reproduces :func:`biot_savart`.
    """
    if not 1.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (1, 2], got {alpha}")
    grid.check(theta_hat)
    _check_zero_mean(theta_hat, "scalar")
    km = grid.kmag
    inv = np.zeros_like(km)
    np.power(km, -float(alpha), out=inv, where=km > 0)
    return _perp_gradient(-theta_hat * inv, grid)


def velocity(omega_hat, grid: Grid2D, alpha=2.0):
    if alpha == 2.0:
        return biot_savart(omega_hat, grid)
    return fractional_velocity(omega_hat, grid, alpha)


def curl(u_hat, grid: Grid2D):
    return derivative(u_hat[1], grid, (1, 0)) - derivative(u_hat[0], grid, (0, 1))


def divergence(u_hat, grid: Grid2D):
    return derivative(u_hat[0], grid, (1, 0)) + derivative(u_hat[1], grid, (0, 1))


def l2_inner(fhat, ghat):
    """Real part of the Parseval pairing ``mean(f * conj(g))``."""
    fhat, ghat = np.asarray(fhat), np.asarray(ghat)
    if fhat.shape != ghat.shape:
        raise GridMismatchError(f"shape mismatch {fhat.shape} vs {ghat.shape}")
    return float(np.real(np.vdot(ghat, fhat)))


def l2_norm(fhat):
    return float(np.sqrt(np.sum(np.abs(fhat) ** 2)))


def sup_norm(fhat):
    return float(np.max(np.abs(inverse(fhat))))


def _pad(fhat, m):
    n = fhat.shape[-1]
    h = n // 2
    out = np.zeros(fhat.shape[:-2] + (m, m), dtype=complex)
    f = fhat
    out[..., :h, :h] = f[..., :h, :h]
    out[..., :h, m - h + 1:] = f[..., :h, h + 1:]
    out[..., m - h + 1:, :h] = f[..., h + 1:, :h]
    out[..., m - h + 1:, m - h + 1:] = f[..., h + 1:, h + 1:]
    return out


def _truncate(Fhat, n):
    m = Fhat.shape[-1]
    h = n // 2
    out = np.zeros(Fhat.shape[:-2] + (n, n), dtype=complex)
    out[..., :h, :h] = Fhat[..., :h, :h]
    out[..., :h, h + 1:] = Fhat[..., :h, m - h + 1:]
    out[..., h + 1:, :h] = Fhat[..., m - h + 1:, :h]
    out[..., h + 1:, h + 1:] = Fhat[..., m - h + 1:, m - h + 1:]
    return out


class PaddedProduct:
    """Alias-free products via zero padding to ``3n/2`` points per axis.

    Nyquist modes of the inputs are discarded (they have no unambiguous
    padded representation).  Products of several pairs can be accumulated in
    padded physical space and transformed back once.
    """

    def __init__(self, grid: Grid2D):
        self.grid = grid
        self.m = 3 * grid.n // 2

    def to_physical(self, fhat, real=True):
        P = _pad(fhat * self.grid.nyquist_free, self.m)
        out = sfft.ifft2(P, axes=(-2, -1)) * self.m**2
        return out.real if real else out

    def to_spectral(self, values):
        F = sfft.fft2(values, axes=(-2, -1)) / self.m**2
        return _truncate(F, self.grid.n)

    def __call__(self, fhat, ghat):
        return self.to_spectral(self.to_physical(fhat) * self.to_physical(ghat))


def dealiased_product(fhat, ghat, grid: Grid2D):
    grid.check(fhat, ghat)
    return PaddedProduct(grid)(fhat, ghat)
