"""Paraproducts, paradifferential operators and paracomposition on the torus.

The smooth admissible cutoff is replaced by its dyadic surrogate: the block
``Delta_i u`` is paired with the low-pass ``P_{<= i - N0}`` of the
coefficient.  With ``N0 >= ceil(log2 B) + 2`` the frequency of the
coefficient never exceeds ``1/B`` times that of ``u``, which gives the usual
annular localization of ``T_a``.

Products are computed alias-free (3/2 padding).  The affine part of a
diffeomorphism never enters: operators act on the periodic displacement
``chi - Id`` only, since ``Delta_i x = 0`` for every ``i >= 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .dyadic import DyadicPartition, tail_profile
from .fourier_core import Grid2D, PaddedProduct, derivative, forward, inverse, l2_norm
from .interp import SpectralInterpolator


@dataclass(frozen=True)
class AdmissibleCutoff:
    B: float = 4.0
    b: float = 1.0
    N0: int | None = None

    def __post_init__(self):
        if not self.B > 1:
            raise ValueError(f"B must exceed 1, got {self.B}")
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")
        n0 = self.N0 if self.N0 is not None else math.ceil(math.log2(self.B)) + 2
        if n0 < 1:
            raise ValueError(f"N0 must be >= 1, got {n0}")
        object.__setattr__(self, "N0", int(n0))


def _block_indices(part: DyadicPartition, N0, eps=1.0):
    return [i for i in part.block_range(eps) if i >= N0]


def paraproduct(fhat, ghat, grid: Grid2D, cutoff=AdmissibleCutoff()):
    """``T_f g = sum_{i >= N0} P_{<= i-N0}(D) f * Delta_i g``."""
    grid.check(fhat, ghat)
    part = DyadicPartition(grid)
    pp = PaddedProduct(grid)
    acc = 0.0
    for i in _block_indices(part, cutoff.N0):
        gi = ghat * part.block(i)
        if not np.any(gi):
            continue
        acc = acc + pp.to_physical(fhat * part.lowpass(i - cutoff.N0)) * pp.to_physical(gi)
    if np.isscalar(acc):
        return np.zeros(grid.shape, dtype=complex)
    return pp.to_spectral(acc)


def remainder(fhat, ghat, grid: Grid2D, cutoff=AdmissibleCutoff()):
    """``R(f, g) = sum_q sum_{|m| < N0} Delta_{q-m} f * Delta_q g``."""
    grid.check(fhat, ghat)
    part = DyadicPartition(grid)
    pp = PaddedProduct(grid)
    K = part.kmax
    fb = [pp.to_physical(fhat * part.block(k)) for k in range(K + 1)]
    acc = 0.0
    for q in range(K + 1):
        gq = ghat * part.block(q)
        if not np.any(gq):
            continue
        band = sum(fb[j] for j in range(max(0, q - cutoff.N0 + 1), min(K, q + cutoff.N0 - 1) + 1))
        acc = acc + band * pp.to_physical(gq)
    if np.isscalar(acc):
        return np.zeros(grid.shape, dtype=complex)
    return pp.to_spectral(acc)


def high_part(uhat, grid: Grid2D, cutoff=AdmissibleCutoff(), eps=1.0):
    """``u - sum_{i < N0} Delta_i(eps D) u``, i.e. ``T_1 u``."""
    return uhat * (1.0 - DyadicPartition(grid).lowpass(cutoff.N0 - 1, eps))


def paraproduct_annulus(j, cutoff=AdmissibleCutoff()):
    """Radii ``((1 - 1/B') 2^(j-1), (1 + 1/B') 2^(j+1))`` with ``B' = 2^(N0-2)``.

    ``Delta_j g`` meets blocks ``j-1..j+1`` and the low-passed coefficient of
    block ``i`` has radius ``2^(i+1-N0)``; the worst inner case is ``i = j``
    and the worst outer case ``i = j+1``, which the annulus covers.  For the
    derived ``N0`` we have ``B' >= B``.
    """
    w = 2.0 ** (2 - cutoff.N0)
    return max(0.0, (1 - w) * 2.0 ** (j - 1)), (1 + w) * 2.0 ** (j + 1)


def localization_leak(fhat, ghat, grid: Grid2D, j, cutoff=AdmissibleCutoff()):
    """Relative L^2 mass of ``T_f Delta_j g`` outside :func:`paraproduct_annulus`."""
    out = paraproduct(fhat, ghat * DyadicPartition(grid).block(j), grid, cutoff)
    lo, hi = paraproduct_annulus(j, cutoff)
    r = grid.kmag
    outside = (r < lo * (1 - 1e-12)) | (r > hi * (1 + 1e-12))
    total = np.sum(np.abs(out) ** 2)
    return float(np.sqrt(np.sum(np.abs(out[outside]) ** 2) / total)) if total > 0 else 0.0


# -- symbols -------------------------------------------------------------------

def _unit(xi1, xi2):
    return np.ones(np.broadcast(xi1, xi2).shape)


@dataclass
class SymbolRep:
    """``a(x, xi) = sum_n c_n(x) m_n(xi)``.

    ``coeffs`` holds physical coefficient fields (arrays of shape ``(n, n)`` or
    scalars), ``mults`` callables ``m(xi1, xi2)`` defined for ``|xi| >= 1/2``.
    """

    coeffs: list
    mults: list
    order: float = 0.0
    homogeneous: bool = False
    truncation_mass: float = 0.0

    def __post_init__(self):
        if len(self.coeffs) != len(self.mults):
            raise ValueError("coeffs and mults must have equal length")
        self.mults = [_unit if m is None else m for m in self.mults]

    @classmethod
    def multiplier(cls, mult, order=0.0, homogeneous=False):
        return cls([1.0], [mult], order, homogeneous)

    @classmethod
    def function(cls, f):
        return cls([np.asarray(f, dtype=float)], [None], 0.0, True)

    def evaluate(self, xi1, xi2, at=None):
        """Values at physical points ``at=(i, j)`` index arrays, or on the whole grid."""
        out = 0.0
        for c, m in zip(self.coeffs, self.mults):
            cv = c if np.isscalar(c) else (c if at is None else c[at])
            mv = m(np.asarray(xi1, float), np.asarray(xi2, float))
            out = out + (np.multiply.outer(cv, mv) if (at is None and not np.isscalar(cv)) else cv * mv)
        return out

    def scaled(self, s):
        return SymbolRep([c * s for c in self.coeffs], list(self.mults), self.order,
                         self.homogeneous, self.truncation_mass)

    def __sub__(self, other):
        return SymbolRep(list(self.coeffs) + [c * -1 for c in other.coeffs],
                         list(self.mults) + list(other.mults),
                         max(self.order, other.order), False,
                         self.truncation_mass + other.truncation_mass)


def _check_symbol(symbol, grid, eps, N0):
    k1, k2 = grid.k
    sel = grid.kmag * eps >= 2.0 ** (N0 - 1) * 0.999
    for m in symbol.mults:
        v = m(k1[sel], k2[sel])
        if not np.all(np.isfinite(v)):
            raise ValueError("symbol undefined on required lattice points")


def paradiff_apply(symbol: SymbolRep, uhat, grid: Grid2D, cutoff=AdmissibleCutoff(),
                   eps=1.0, real=True):
    """``T_a u = sum_n sum_{i >= N0} P_{<= i-N0}(D) c_n * m_n(D) Delta_i(eps D) u``.

    ``eps != 1`` gives the semiclassical operator ``sigma_a(x, eps D)``: the
    dyadic cutoff is dilated so only frequencies ``>~ 2^(N0-1)/eps`` survive.
    Multipliers are evaluated at ``D`` itself, which coincides with ``eps D``
    for 0-homogeneous symbols and lets lower-order parts gain ``eps^order``.
    """
    grid.check(uhat)
    _check_symbol(symbol, grid, eps, cutoff.N0)
    part = DyadicPartition(grid)
    pp = PaddedProduct(grid)
    k1, k2 = grid.k
    blocks = []
    for i in _block_indices(part, cutoff.N0, eps):
        ui = uhat * part.block(i, eps)
        if np.any(ui):
            blocks.append((i, ui))
    acc = 0.0
    for c, m in zip(symbol.coeffs, symbol.mults):
        with np.errstate(divide="ignore", invalid="ignore"):
            mk = m(k1, k2)
        mk = np.where(grid.kmag >= 0.5, mk, 0.0)
        chat = None if np.isscalar(c) else forward(c)
        for i, ui in blocks:
            v = pp.to_physical(mk * ui, real=False)
            if chat is None:
                acc = acc + c * v
            else:
                acc = acc + pp.to_physical(chat * part.lowpass(i - cutoff.N0), real=False) * v
    if np.isscalar(acc):
        return np.zeros(grid.shape, dtype=complex)
    if real:
        acc = acc.real
    return pp.to_spectral(acc)


def _fd(m, xi1, xi2, alpha, h):
    a1, a2 = alpha
    if a1:
        return (_fd(m, xi1 + h, xi2, (a1 - 1, a2), h) - _fd(m, xi1 - h, xi2, (a1 - 1, a2), h)) / (2 * h)
    if a2:
        return (_fd(m, xi1, xi2 + h, (a1, a2 - 1), h) - _fd(m, xi1, xi2 - h, (a1, a2 - 1), h)) / (2 * h)
    return m(xi1, xi2)


def symbol_seminorm(symbol: SymbolRep, grid: Grid2D, m=None, rho=0, n=2,
                    xi_cap=16.0, h=1e-3, chunk=256):
    """Discrete ``M^m_rho(a; n)``.

    Sup over lattice ``xi`` with ``1/2 <= |xi| <= xi_cap`` and over grid ``x``
    of ``(1+|xi|)^(|alpha|-m) |d_xi^alpha a|``; for ``rho = 1`` the first
    forward differences in ``x`` are added.  Derivatives in ``xi`` are
    central differences of the continuous multipliers.
    """
    m = symbol.order if m is None else m
    if rho not in (0, 1):
        raise ValueError("rho must be 0 or 1")
    if not 0 <= n <= 4:
        raise ValueError("n must lie in [0, 4]")
    k1, k2 = grid.k
    sel = (grid.kmag >= 0.5) & (grid.kmag <= xi_cap)
    if not np.any(sel):
        raise ValueError("insufficient lattice range for requested seminorm")
    x1, x2 = k1[sel], k2[sel]
    w0 = 1 + np.hypot(x1, x2)
    nx = grid.n * grid.n
    C = np.stack([np.full(nx, c, dtype=complex) if np.isscalar(c) else np.asarray(c, complex).ravel()
                  for c in symbol.coeffs])
    best = 0.0
    for total in range(n + 1):
        for a1 in range(total + 1):
            alpha = (a1, total - a1)
            D = np.stack([_fd(mm, x1, x2, alpha, h) for mm in symbol.mults])
            D = D * w0 ** (total - m)
            for s in range(0, D.shape[1], chunk):
                vals = C.T @ D[:, s:s + chunk]
                cur = np.max(np.abs(vals))
                if rho == 1:
                    V = vals.reshape(grid.n, grid.n, -1)
                    g1 = np.abs(np.roll(V, -1, 0) - V) / grid.dx
                    g2 = np.abs(np.roll(V, -1, 1) - V) / grid.dx
                    cur = cur + max(g1.max(), g2.max())
                best = max(best, float(cur))
    return best


def theta_harmonic(n):
    def m(xi1, xi2):
        return np.exp(1j * n * np.arctan2(xi2, xi1))
    m.__name__ = f"exp_i{n}theta"
    return m


def theta_cosine(n):
    def m(xi1, xi2):
        return np.cos(n * np.arctan2(xi2, xi1))
    m.__name__ = f"cos{n}theta"
    return m


def flow_symbol(A, beta=1.0, n_theta=32):
    """``(|xi| / |A(x) xi|)^beta`` as an angular expansion.

    ``A`` has shape ``(2, 2, n, n)``.  For each grid point the function
    ``theta -> |A (cos, sin)|^-beta`` is sampled at ``n_theta`` angles and
    replaced by its trigonometric interpolant (harmonics ``|k| <= n_theta/2``,
    the top one as a cosine), so the symbol is exact at the sample angles.
    The truncation mass is the l1 mass of the harmonics of order
    ``> n_theta/2``, measured with twice the sampling.
    """
    if n_theta % 2 or n_theta < 4:
        raise ValueError("n_theta must be an even count >= 4")
    A = np.asarray(A, dtype=float)
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if np.any(det == 0) or not np.all(np.isfinite(A)):
        raise ValueError("matrix field is singular at some grid point")

    th = np.pi * np.arange(2 * n_theta) / n_theta
    c, s_ = np.cos(th), np.sin(th)
    v1 = A[0, 0][..., None] * c + A[0, 1][..., None] * s_
    v2 = A[1, 0][..., None] * c + A[1, 1][..., None] * s_
    r = np.hypot(v1, v2)
    samples = 1.0 / r if beta == 1 else r ** (-beta)
    fine = np.fft.fft(samples, axis=-1) / (2 * n_theta)
    # the even fine samples are exactly the n_theta-point sampling
    ch = np.fft.fft(samples[..., ::2], axis=-1) / n_theta
    orders = np.fft.fftfreq(2 * n_theta, 1.0 / (2 * n_theta))
    mass = float(np.max(np.sum(np.abs(fine[..., np.abs(orders) > n_theta // 2]), axis=-1)))
    half = n_theta // 2
    terms, mults = [], []
    # the integrand is pi-periodic in theta, so odd harmonics vanish
    for k in range(-half + 1, half + 1):
        ck = ch[..., k % n_theta]
        if k % 2 or not np.any(np.abs(ck) > 1e-15):
            continue
        if k == 0:
            terms.append(ck.real.copy())
            mults.append(None)
        elif k == half:
            terms.append(ck.real.copy())
            mults.append(theta_cosine(k))
        else:
            terms.append(ck)
            mults.append(theta_harmonic(k))
    return SymbolRep(terms, mults, 0.0, True, mass)


# -- diffeomorphisms -----------------------------------------------------------

class NotADiffeomorphismError(ValueError):
    pass


def jacobian_from_displacement(disp, grid: Grid2D):
    """``D chi = I + D d`` from the periodic displacement ``d`` (shape ``(2, n, n)``)."""
    dh = forward(disp)
    J = np.empty((2, 2) + grid.shape)
    for i in range(2):
        for j in range(2):
            J[i, j] = inverse(derivative(dh[i], grid, (1, 0) if j == 0 else (0, 1)))
    J[0, 0] += 1.0
    J[1, 1] += 1.0
    return J


def inverse_2x2(J):
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    inv = np.empty_like(J)
    inv[0, 0] = J[1, 1] / det
    inv[1, 1] = J[0, 0] / det
    inv[0, 1] = -J[0, 1] / det
    inv[1, 0] = -J[1, 0] / det
    return inv, det


def _opnorm(J):
    """Pointwise spectral norm of a ``(2, 2, ...)`` matrix field."""
    a, b, c, d = J[0, 0], J[0, 1], J[1, 0], J[1, 1]
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    return np.sqrt(0.5 * (s + np.sqrt(np.maximum(s * s - 4 * det * det, 0.0))))


@dataclass
class DiffeoMap:
    """``chi(x) = x + d(x)`` with periodic displacement ``d``."""

    grid: Grid2D
    displacement: np.ndarray
    window: int | None = None
    jacobian: np.ndarray = field(init=False)
    inverse_jacobian: np.ndarray = field(init=False)
    det: np.ndarray = field(init=False)

    def __post_init__(self):
        self.displacement = np.asarray(self.displacement, dtype=float)
        if self.displacement.shape != (2,) + self.grid.shape:
            raise ValueError("displacement must have shape (2, n, n)")
        self.jacobian = jacobian_from_displacement(self.displacement, self.grid)
        self.inverse_jacobian, self.det = inverse_2x2(self.jacobian)
        if np.any(self.det <= 0):
            raise NotADiffeomorphismError("not a diffeomorphism: det D chi <= 0 somewhere")
        if self.window is None:
            bound = max(_opnorm(self.jacobian).max(), _opnorm(self.inverse_jacobian).max())
            self.window = max(1, int(np.floor(np.log2(bound))) + 1)

    @classmethod
    def identity(cls, grid):
        return cls(grid, np.zeros((2,) + grid.shape))

    @property
    def points(self):
        x1, x2 = self.grid.x
        return x1 + self.displacement[0], x2 + self.displacement[1]

    def jacobian_bounds(self):
        return float(_opnorm(self.jacobian).max()), float(_opnorm(self.inverse_jacobian).max())


def compose(uhat, chi: DiffeoMap, interp: SpectralInterpolator | None = None):
    """``u o chi`` sampled on the grid, returned as coefficients."""
    interp = interp or SpectralInterpolator(chi.grid)
    p1, p2 = chi.points
    return forward(interp(uhat, p1, p2))


def paracompose(chi: DiffeoMap, uhat, interp: SpectralInterpolator | None = None):
    """``chi^* u = sum_k sum_{|l-k| <= N, l >= 0} P_l(D) ((Delta_k u) o chi)``."""
    grid = chi.grid
    grid.check(uhat)
    interp = interp or SpectralInterpolator(grid)
    part = DyadicPartition(grid)
    N = chi.window
    p1, p2 = chi.points
    blocks, idx = [], []
    for k in range(part.kmax + 1):
        uk = uhat * part.block(k)
        if np.any(np.abs(uk) > 0):
            blocks.append(uk)
            idx.append(k)
    out = np.zeros(grid.shape, dtype=complex)
    if not blocks:
        return out
    vals = interp(np.stack(blocks), p1, p2)
    for k, v in zip(idx, vals):
        window = part.lowpass(k + N) - part.lowpass(k - N - 1)
        out += forward(v) * window
    return out


def paralinearize_composition(uhat, chi: DiffeoMap, cutoff=AdmissibleCutoff(),
                              interp: SpectralInterpolator | None = None):
    """Split ``u o chi = chi^* u + T_{Du o chi} . (chi - Id) + R``.

    Returns ``(chi^* u, T-term, R, u o chi)`` as coefficients.
    """
    grid = chi.grid
    interp = interp or SpectralInterpolator(grid)
    p1, p2 = chi.points
    grads = np.stack([derivative(uhat, grid, (1, 0)), derivative(uhat, grid, (0, 1))])
    vals = interp(np.concatenate([uhat[None], grads]), p1, p2)
    comp = forward(vals[0])
    pull = paracompose(chi, uhat, interp)
    dh = forward(chi.displacement)
    tterm = sum(paraproduct(forward(vals[1 + j]), dh[j], grid, cutoff) for j in range(2))
    return pull, tterm, comp - pull - tterm, comp


def para_dot(fhats, ghats, grid, cutoff=AdmissibleCutoff()):
    """``sum_j T_{f_j} g_j``."""
    return sum(paraproduct(f, g, grid, cutoff) for f, g in zip(fhats, ghats))


def commutator_check(u_hat, omega_hat, grid: Grid2D, eps, chi, cutoff=AdmissibleCutoff(), lam=2.0):
    """``||[chi(eps D), T_u . grad] omega|| / (||Du||_inf dr_omega(lam eps))``."""
    mult = chi(grid, eps)
    grads = [derivative(omega_hat, grid, (1, 0)), derivative(omega_hat, grid, (0, 1))]
    tg = para_dot(u_hat, grads, grid, cutoff)
    cw = omega_hat * mult
    grads_c = [derivative(cw, grid, (1, 0)), derivative(cw, grid, (0, 1))]
    comm = mult * tg - para_dot(u_hat, grads_c, grid, cutoff)
    du = max(float(np.max(np.abs(inverse(derivative(u_hat[i], grid, o)))))
             for i in range(2) for o in ((1, 0), (0, 1)))
    if du == 0:
        return 0.0
    dr = tail_profile(omega_hat, grid, np.array([lam * eps])).dr[0]
    if dr <= 1e-14 * l2_norm(omega_hat):
        raise ValueError("dr_omega(lam eps) below guard threshold")
    return l2_norm(comm) / (du * dr)
