"""Initial vorticity with a prescribed Fourier tail ``dr(eps) ~ eps^s``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dyadic import slow_varying_table, tail_profile
from ..fourier_core import Grid2D, l2_norm
from .rng import uniforms

KINDS = ("powerlaw", "shear_plus_powerlaw", "bandlimited", "file")


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class DataSpec:
    kind: str = "powerlaw"
    s: float = 1.5
    seed: int = 0
    amplitude: float = 1.0
    band: float = 8.0          # radius for the bandlimited kind
    shear: float = 1.0         # amplitude of cos(x2) for shear_plus_powerlaw
    path: str = ""             # PCF1 file for the file kind

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"data.kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind != "file" and not 1.0 < self.s <= 4.0:
            raise DataError(f"data.s must lie in (1, 4], got {self.s}")


def _hermitian_phases(grid: Grid2D, seed):
    """Unit phases with ``p(-k) = conj p(k)``, Nyquist modes zero."""
    m1, m2 = grid.index
    theta = 2 * np.pi * uniforms(seed, grid.n * grid.n).reshape(grid.shape)
    upper = (m1 > 0) | ((m1 == 0) & (m2 > 0))
    p = np.where(upper, np.exp(1j * theta), 0.0)
    neg = (-grid.index[0]).astype(int) % grid.n, (-grid.index[1]).astype(int) % grid.n
    p = p + np.conj(p[neg]) * (~upper)
    p[0, 0] = 0.0
    return p * grid.nyquist_free


def powerlaw_amplitudes(grid: Grid2D, s):
    """Mode amplitudes whose discrete tail mass is ``r^(-2s)`` at every lattice radius.

    Each distinct radius ``r_i <= kmax_resolved`` receives the mass
    ``r_i^(-2s) - r_(i+1)^(-2s)``, shared equally by its lattice points.  On
    average this is the ``|k|^(-1-s)`` law; unlike the bare formula it has no
    low-wavenumber lattice bias.
    """
    k = np.round(grid.kmag, 9)
    radii = np.unique(k[k > 0])
    inside = radii[radii <= grid.kmax_resolved * (1 + 1e-12)]
    nxt = radii[min(inside.size, radii.size - 1)]
    bounds = np.append(inside, nxt)
    mass = bounds[:-1] ** (-2 * s) - bounds[1:] ** (-2 * s)
    which = np.searchsorted(inside, k)
    count = np.bincount(which[(k > 0) & (k <= inside[-1])], minlength=inside.size)
    amp = np.zeros_like(k)
    sel = (k > 0) & (k <= inside[-1])
    amp[sel] = np.sqrt(mass[which[sel]] / count[which[sel]])
    return amp


def powerlaw_field(grid: Grid2D, s, seed, amplitude=1.0):
    """Random-phase field with ``dr(eps) ~ eps^s``, L^2 norm ``amplitude``."""
    f = powerlaw_amplitudes(grid, s) * _hermitian_phases(grid, seed)
    return f * (amplitude / l2_norm(f))


def generate_initial_data(spec: DataSpec, grid: Grid2D, check=True):
    """Return ``(omega0_hat, ctx)``; ``ctx`` is ``None`` for kinds without a tail."""
    if spec.kind == "file":
        from .io import read_pcf1
        from ..fourier_core import forward
        values, L = read_pcf1(spec.path)
        if values.shape != grid.shape or not np.isclose(L, grid.L):
            raise DataError("snapshot file does not match the configured grid")
        w = forward(values)
        w[0, 0] = 0.0
        w = w * grid.dealias_mask
    elif spec.kind == "bandlimited":
        base = powerlaw_field(grid, spec.s, spec.seed)
        w = base * (grid.kmag <= spec.band)
        w = w * (spec.amplitude / l2_norm(w))
        return w, None
    else:
        if grid.kmax_resolved < 16:
            raise DataError(f"s={spec.s} not resolvable at n={grid.n}")
        w = powerlaw_field(grid, spec.s, spec.seed, spec.amplitude)
        if check:
            _self_check(w, grid, spec.s)
        if spec.kind == "shear_plus_powerlaw":
            m1, m2 = grid.index
            w = w + 0.5 * spec.shear * ((m1 == 0) & (np.abs(m2) == 1))
    return w, slow_varying_table(tail_profile(w, grid))


def _self_check(w, grid, s):
    ctx = slow_varying_table(tail_profile(w, grid))
    prof = ctx.reference
    fit = prof.fit_exponent(lo=8 * prof.eps[-1], hi=prof.eps[1])
    if abs(fit - s) > 0.1:
        raise DataError(f"realized tail exponent {fit:.3f} differs from requested s={s}")
    if not ctx.algebraic:
        raise DataError("generated tail failed the algebraic-decay check")
