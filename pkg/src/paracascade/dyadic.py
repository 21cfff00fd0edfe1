"""Littlewood-Paley machinery, tail profiles and the data-adapted norm.

The tail profile of a field ``f`` is

    dr_f(eps) = ( sum_{|xi| >= 1/eps} |fhat(xi)|^2 )^(1/2),

sampled on the dyadic grid ``eps_j = 2^-j``.  The adapted norm of ``f``
relative to reference data ``omega0`` is ``sup_eps dr_f / dr_omega0`` over
that grid.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .fourier_core import Grid2D, derivative, inverse, l2_norm
from .validation import check_spectral

GUARD = 1e-14


class NotDominatedError(ValueError):
    pass


class InsufficientRangeError(ValueError):
    pass


# -- smooth partition of unity ------------------------------------------------

def _h(x):
    out = np.zeros_like(x, dtype=float)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)
    a = _h(x)
    return a / (a + _h(1.0 - x))


def bump(r):
    """Radial profile equal to 1 on ``r <= 1`` and 0 on ``r >= 2``."""
    return 1.0 - smooth_step(np.asarray(r, dtype=float) - 1.0)


@dataclass(frozen=True)
class DyadicPartition:
    """Dyadic blocks ``P_k = P0(2^-k .) - P0(2^-(k-1) .)`` on a grid.

    ``kmax`` is chosen so the blocks cover every lattice wavenumber,
    including the corners of the square lattice.
    """

    grid: Grid2D

    @property
    def kmax(self):
        rmax = float(self.grid.kmag.max())
        return max(1, int(np.ceil(np.log2(rmax))))

    def lowpass(self, k, eps=1.0):
        """Multiplier ``P_{<=k}(eps xi)``; zero for ``k < 0``."""
        if k < 0:
            return np.zeros(self.grid.shape)
        return bump(self.grid.kmag * eps / 2.0**k)

    def block(self, k, eps=1.0):
        if k < 0:
            return np.zeros(self.grid.shape)
        if k == 0:
            return self.lowpass(0, eps)
        return self.lowpass(k, eps) - self.lowpass(k - 1, eps)

    def block_range(self, eps=1.0):
        """Indices of blocks that touch the lattice after dilation by ``eps``."""
        rmax = float(self.grid.kmag.max()) * eps
        top = max(0, int(np.ceil(np.log2(max(rmax, 1.0)))) + 1)
        return range(0, top + 1)


def _partition(grid):
    return DyadicPartition(grid)


def lp_block(fhat, grid: Grid2D, k):
    part = _partition(grid)
    if not 0 <= k <= part.kmax:
        raise IndexError(f"block index {k} outside [0, {part.kmax}]")
    grid.check(fhat)
    return fhat * part.block(k)


def lp_decompose(fhat, grid: Grid2D):
    part = _partition(grid)
    return np.stack([fhat * part.block(k) for k in range(part.kmax + 1)])


def _lp_norm(values, p):
    if p == 2:
        return float(np.sqrt(np.mean(np.abs(values) ** 2)))
    return float(np.max(np.abs(values)))


def bernstein_ratio(fhat, grid: Grid2D, k, order=(1, 0), p=2, q=2):
    """``||d^order f||_q / (2^(k(|order| + 2(1/p - 1/q))) ||f||_p)`` for a block ``f``."""
    p = np.inf if p in ("inf", np.inf) else p
    q = np.inf if q in ("inf", np.inf) else q
    if p not in (2, np.inf) or q not in (2, np.inf) or (p == np.inf and q == 2):
        raise ValueError(f"unsupported (p, q) = ({p}, {q}); need p <= q in {{2, inf}}")
    inv = lambda r: 0.0 if r == np.inf else 1.0 / r
    denom_f = _lp_norm(inverse(fhat), p)
    if denom_f == 0:
        return 0.0
    num = _lp_norm(inverse(derivative(fhat, grid, order)), q)
    expo = k * (sum(order) + 2 * (inv(p) - inv(q)))
    return num / (2.0**expo * denom_f)


def sobolev_norm(fhat, grid: Grid2D, s):
    if not -4 <= s <= 8:
        raise ValueError(f"s must lie in [-4, 8], got {s}")
    w = (1 + grid.kmag**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(fhat) ** 2)))


def besov_2inf_norm(fhat, grid: Grid2D, s):
    part = _partition(grid)
    return max(2.0 ** (k * s) * l2_norm(fhat * part.block(k)) for k in range(part.kmax + 1))


# -- tail profiles -------------------------------------------------------------

def eps_grid(grid: Grid2D):
    """``eps_j = 2^-j`` in physical units, ``j = 0 .. log2(n/2) - 1``."""
    J = int(np.log2(grid.n // 2))
    return (2 * np.pi / grid.L) ** -1 * 2.0 ** -np.arange(J)


@dataclass
class TailProfile:
    eps: np.ndarray
    dr: np.ndarray
    total: float

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float)
        self.dr = np.asarray(self.dr, dtype=float)

    def at(self, eps):
        """Value at a grid point ``eps`` (exact lookup, no interpolation)."""
        i = np.flatnonzero(np.isclose(self.eps, eps, rtol=1e-12))
        if not i.size:
            raise KeyError(f"eps={eps} not on the sampled grid")
        return float(self.dr[i[0]])

    def fit_exponent(self, lo=None, hi=None):
        """Least-squares slope of ``log dr`` against ``log eps`` on ``lo <= eps <= hi``."""
        sel = self.dr > 0
        if lo is not None:
            sel &= self.eps >= lo * (1 - 1e-12)
        if hi is not None:
            sel &= self.eps <= hi * (1 + 1e-12)
        if sel.sum() < 2:
            raise InsufficientRangeError("need at least two usable points to fit")
        return float(np.polyfit(np.log(self.eps[sel]), np.log(self.dr[sel]), 1)[0])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "dr"])
            for e, d in zip(self.eps, self.dr):
                w.writerow([repr(float(e)), repr(float(d))])


def tail_profile(fhat, grid: Grid2D, eps=None):
    grid.check(fhat)
    eps = eps_grid(grid) if eps is None else np.asarray(eps, dtype=float)
    km = grid.kmag.ravel()
    power = np.abs(np.asarray(fhat).ravel()) ** 2
    order = np.argsort(km)
    km, power = km[order], power[order]
    # suffix sums: mass with |xi| >= r
    suffix = np.concatenate([np.cumsum(power[::-1])[::-1], [0.0]])
    idx = np.searchsorted(km, 1.0 / eps - 1e-9 * (1.0 / eps), side="left")
    dr = np.sqrt(suffix[idx])
    # enforce exact monotonicity against summation round-off
    dr = np.minimum.accumulate(dr)
    return TailProfile(eps, dr, l2_norm(fhat))


# -- slow-varying table and adapted norms --------------------------------------

@dataclass
class AdaptedNormContext:
    reference: TailProfile
    lambdas: np.ndarray
    C: np.ndarray
    alpha_fit: float
    fit_residual: float
    algebraic: bool
    guard: float = field(default=0.0)

    def usable(self):
        return self.reference.dr > self.guard

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "C"])
            for lam, c in zip(self.lambdas, self.C):
                w.writerow([repr(float(lam)), repr(float(c))])


def slow_varying_table(profile: TailProfile, lambdas=(1.0, 0.5, 0.25, 0.125), guard=None):
    """``C(lambda) = min_eps dr(lambda eps) / dr(eps)`` over the sampled grid.

    ``lambda = 2^-m`` shifts the dyadic index by ``m``.  The table also
    carries a least-squares exponent for ``C(lambda) ~ lambda^alpha`` and an
    algebraic-decay flag.
    """
    guard = GUARD * profile.total if guard is None else guard
    dr = profile.dr
    ok = dr > guard
    usable = int(np.argmin(ok)) if not ok.all() else ok.size
    if usable < 6:
        raise InsufficientRangeError(
            f"insufficient dynamic range: {usable} usable dyadic points (need 6)"
        )
    d = dr[:usable]
    # a single occupied shell shows up as a jump from total mass to nothing
    if np.count_nonzero(np.diff(d) < -1e-12 * d[0]) < 2:
        raise InsufficientRangeError("insufficient dynamic range: spectrum occupies one shell")
    lambdas = np.asarray(lambdas, dtype=float)
    C = np.empty_like(lambdas)
    for i, lam in enumerate(lambdas):
        m = int(round(-np.log2(lam)))
        if not np.isclose(2.0**-m, lam):
            raise ValueError(f"lambda must be a power of 1/2, got {lam}")
        C[i] = 1.0 if m == 0 else float(np.min(d[m:] / d[:-m]))
    sel = lambdas < 1
    logl = np.log(lambdas[sel])
    logc = np.log(C[sel])
    alpha = float(np.sum(logl * logc) / np.sum(logl**2))
    resid = float(np.sqrt(np.mean((logc - alpha * logl) ** 2)) / max(abs(alpha), 1e-12))
    local = np.log2(d[:-1] / d[1:])
    spread_ok = (local.max() - local.min()) <= max(1.0, 0.5 * np.median(local))
    algebraic = bool(resid < 0.15 and spread_ok)
    return AdaptedNormContext(profile, lambdas, C, alpha, resid, algebraic, guard)


def _ratios(values, ctx):
    ref = ctx.reference.dr
    ok = ref > ctx.guard
    return np.where(ok, values / np.where(ok, ref, 1.0), 0.0), ok


def _dominance_check(r, ok, strict):
    r = r[ok]
    if r.size >= 3 and r[-1] > r[-2] > r[-3] and r[-1] > 4 * r[-3] and r[-1] >= r.max():
        msg = "not dominated by reference: ratio grows as eps shrinks"
        if strict:
            raise NotDominatedError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)


def adapted_norm(fhat, grid: Grid2D, ctx: AdaptedNormContext, strict=False):
    prof = tail_profile(fhat, grid, ctx.reference.eps)
    r, ok = _ratios(prof.dr, ctx)
    _dominance_check(r, ok, strict)
    return float(r.max())


def dyadic_adapted_norm(fhat, grid: Grid2D, ctx: AdaptedNormContext, strict=False):
    """``sup_k ||Delta_k f|| / dr_ref(2^-k)`` over blocks on the sampled grid."""
    part = _partition(grid)
    eps = ctx.reference.eps
    vals = np.array([l2_norm(fhat * part.block(j, eps[0])) for j in range(len(eps))])
    r, ok = _ratios(vals, ctx)
    _dominance_check(r, ok, strict)
    return float(r.max())


def lowpass_adapted_norm(fhat, grid: Grid2D, ctx: AdaptedNormContext, strict=False):
    """``sup_k ||(1 - P_{<=k-1}(D)) f|| / dr_ref(2^-k)``: smooth-cutoff tail ratio."""
    part = _partition(grid)
    eps = ctx.reference.eps
    base = eps[0]
    vals = np.array([l2_norm(fhat * (1.0 - part.lowpass(j - 1, base))) for j in range(len(eps))])
    r, ok = _ratios(vals, ctx)
    _dominance_check(r, ok, strict)
    return float(r.max())


# -- estimator front ends -------------------------------------------------------

class LittlewoodPaley(TransformerMixin, BaseEstimator):
    """Split fields into dyadic blocks.

    ``transform`` maps coefficients of shape ``(n, n)`` (or a batch
    ``(m, n, n)``) to blocks of shape ``(..., kmax + 1, n, n)``.
    ``inverse_transform`` sums the blocks back.
    """

    def __init__(self, n=128, L=2 * np.pi):
        self.n = n
        self.L = L

    def fit(self, X=None, y=None):
        self.grid_ = Grid2D(self.n, self.L)
        self.partition_ = DyadicPartition(self.grid_)
        self.kmax_ = self.partition_.kmax
        self.masks_ = np.stack([self.partition_.block(k) for k in range(self.kmax_ + 1)])
        return self

    def transform(self, X):
        check_is_fitted(self, "masks_")
        X = check_spectral(X, self.grid_, allow_batch=True)
        return X[..., None, :, :] * self.masks_

    def inverse_transform(self, X):
        return np.sum(X, axis=-3)


class AdaptedNorm(BaseEstimator):
    """Adapted norm ``||.||_{omega0}`` learned from reference data.

    ``fit(omega0_hat)`` builds the tail profile and the slow-varying table;
    ``transform`` returns the adapted norm of each input field; ``score``
    returns the negative adapted norm of one field.
    """

    def __init__(self, n=128, L=2 * np.pi, variant="tail", strict=False):
        self.n = n
        self.L = L
        self.variant = variant
        self.strict = strict

    def fit(self, X, y=None):
        self.grid_ = Grid2D(self.n, self.L)
        X = check_spectral(X, self.grid_)
        self.profile_ = tail_profile(X, self.grid_)
        self.context_ = slow_varying_table(self.profile_)
        return self

    def _norm(self, f):
        fn = {"tail": adapted_norm, "dyadic": dyadic_adapted_norm,
              "lowpass": lowpass_adapted_norm}[self.variant]
        return fn(f, self.grid_, self.context_, strict=self.strict)

    def transform(self, X):
        check_is_fitted(self, "context_")
        X = check_spectral(X, self.grid_, allow_batch=True)
        if X.ndim == 2:
            return np.array([self._norm(X)])
        return np.array([self._norm(f) for f in X])

    def score(self, X, y=None):
        return -float(self.transform(X)[0])
