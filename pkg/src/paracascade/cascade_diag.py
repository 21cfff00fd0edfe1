"""Semiclassical pairings, the Lyapunov pairing and frequency-cascade verdicts.

The Lyapunov pairing of a flow map ``Phi`` with ``A = [D Phi]^-1`` is

    W(t, eps) = ( |D|^(alpha-2) curl T_A (Phi - Id), chi(eps D)^2 omega0 )

and its rate is compared against the positive term

    P(t, eps) = || T_a chi(eps D) omega0 ||^2,   a = (|xi| / |A^T xi|)^(alpha/2).

Only the periodic displacement enters ``T_A``: the coordinate function has
no dyadic content above the lowest block.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dyadic import smooth_step, tail_profile
from .fourier_core import Grid2D, curl, forward, l2_inner, l2_norm
from .paracalc import (AdmissibleCutoff, SymbolRep, _opnorm, flow_symbol,
                       paradiff_apply, paraproduct, symbol_seminorm)


class UnresolvedScaleError(ValueError):
    pass


class TruncationError(ValueError):
    pass


@dataclass(frozen=True)
class ChiCutoff:
    """Smooth radial bump supported in ``r0 <= |xi| <= r1``, peak value 1."""

    r0: float = 1.0
    r1: float = 4.0 / 3.0

    def __post_init__(self):
        if not self.r0 >= 1.0:
            raise ValueError(f"chi inner radius must be >= 1, got {self.r0}")
        if not self.r1 > self.r0:
            raise ValueError("chi outer radius must exceed the inner radius")

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        w = 0.5 * (self.r1 - self.r0)
        return smooth_step((r - self.r0) / w) * smooth_step((self.r1 - r) / w)

    def __call__(self, grid: Grid2D, eps):
        return self.profile(eps * grid.kmag)


def _check_resolved(grid, eps, radius):
    if radius / eps > grid.kmax_resolved:
        raise UnresolvedScaleError(
            f"unresolved semiclassical scale: 1/eps={1 / eps:g} exceeds the resolved band"
        )


# -- semiclassical pairings ----------------------------------------------------

def semiclassical_pairing(a: SymbolRep, eps, uhat, vhat, grid: Grid2D,
                          cutoff=AdmissibleCutoff()):
    """``(sigma_a(x, eps D) u, v)``."""
    grid.check(uhat, vhat)
    _check_resolved(grid, eps, 2.0 ** (cutoff.N0 - 1))
    return l2_inner(paradiff_apply(a, uhat, grid, cutoff, eps), vhat)


@dataclass
class RateReport:
    eps: np.ndarray
    pairing: np.ndarray
    envelope: np.ndarray
    seminorm: float
    slope: float
    kappa: float

    @property
    def sup_envelope(self):
        return float(np.max(self.envelope))


def rate_check(a: SymbolRep, uhat, vhat, grid: Grid2D, eps_list, kappa=1.0,
               cutoff=AdmissibleCutoff(), m=0.0):
    """Envelope ``|pairing| / (M^m_0(a;2) dr_u(kappa eps) dr_v(kappa eps))`` and fitted slope."""
    eps_list = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    if eps_list.size < 3 or eps_list[0] / eps_list[-1] < 4:
        raise ValueError("insufficient dynamic range: need >= 3 eps values over 2 octaves")
    vals = np.array([semiclassical_pairing(a, e, uhat, vhat, grid, cutoff) for e in eps_list])
    M = symbol_seminorm(a, grid, m, 0, 2)
    du = tail_profile(uhat, grid, kappa * eps_list).dr
    dv = tail_profile(vhat, grid, kappa * eps_list).dr
    denom = M * du * dv
    with np.errstate(divide="ignore", invalid="ignore"):
        env = np.where(denom > 0, np.abs(vals) / denom, np.where(vals == 0, 0.0, np.inf))
    ok = np.abs(vals) > 0
    slope = float(np.polyfit(np.log(eps_list[ok]), np.log(np.abs(vals[ok])), 1)[0]) \
        if ok.sum() >= 2 else float("nan")
    return RateReport(eps_list, vals, env, M, slope, kappa)


# -- Lyapunov pairing ----------------------------------------------------------

def para_pullback_displacement(flow, cutoff=AdmissibleCutoff()):
    """``T_A (Phi - Id)`` with ``A = [D Phi]^-1``, componentwise; shape ``(2, n, n)``."""
    g = flow.grid
    A = flow.inverse_jacobian
    dh = forward(flow.displacement)
    Ah = forward(A)
    return np.stack([sum(paraproduct(Ah[i, j], dh[j], g, cutoff) for j in range(2))
                     for i in range(2)])


def _frac_laplacian(fhat, grid, power):
    if power == 0:
        return fhat
    km = grid.kmag
    mult = np.zeros_like(km)
    np.power(km, power, out=mult, where=km > 0)
    return fhat * mult


def lyapunov_W(flow, omega0_hat, chi: ChiCutoff, eps_list, cutoff=AdmissibleCutoff(),
               alpha=2.0, two_sided=True):
    """``W(t, eps)`` for every ``eps``; one para-pullback shared across scales."""
    g = flow.grid
    for e in eps_list:
        _check_resolved(g, e, chi.r1)
    c = _frac_laplacian(curl(para_pullback_displacement(flow, cutoff), g), g, alpha - 2.0)
    out = []
    for e in eps_list:
        x = chi(g, e)
        out.append(l2_inner(c, omega0_hat * (x * x if two_sided else x)))
    return np.array(out)


def positive_symbol(flow, alpha=2.0, n_theta=32):
    """``(|xi| / |A^T xi|)^(alpha/2)`` as an angular expansion."""
    A = flow.inverse_jacobian
    return flow_symbol(np.swapaxes(A, 0, 1), alpha / 2.0, n_theta)


def lyapunov_P(flow, omega0_hat, chi: ChiCutoff, eps_list, cutoff=AdmissibleCutoff(),
               alpha=2.0, n_theta=32, max_mass=1e-3, symbol=None):
    g = flow.grid
    a = symbol or positive_symbol(flow, alpha, n_theta)
    if a.truncation_mass > max_mass:
        raise TruncationError(
            f"symbol truncation mass {a.truncation_mass:.2e} above {max_mass:.1e}; raise n_theta"
        )
    out = []
    for e in eps_list:
        _check_resolved(g, e, chi.r1)
        out.append(l2_norm(paradiff_apply(a, omega0_hat * chi(g, e), g, cutoff)) ** 2)
    return np.array(out), a.truncation_mass


def lyapunov_pairing(flow, omega0_hat, chi: ChiCutoff, eps, cutoff=AdmissibleCutoff(),
                     alpha=2.0, n_theta=32, two_sided=True):
    """``(W, P, truncation_mass)`` at a single scale."""
    W = lyapunov_W(flow, omega0_hat, chi, [eps], cutoff, alpha, two_sided)[0]
    P, mass = lyapunov_P(flow, omega0_hat, chi, [eps], cutoff, alpha, n_theta)
    return float(W), float(P[0]), mass


# -- series, reports and verdicts ----------------------------------------------

PAIRING_COLUMNS = ("t", "eps", "W", "P", "dWdt_fd", "bound", "dr_ref", "trusted")


@dataclass
class PairingSeries:
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def append(self, t, eps, W, P, dWdt=float("nan"), bound=float("nan"), dr_ref=float("nan"),
               trusted=True):
        vals = (t, eps, W, P, dWdt, bound, dr_ref)
        if not all(np.isfinite(v) for v in vals[:4]):
            raise ValueError("pairing series entries must be finite")
        self.rows.append(tuple(float(v) for v in vals) + (int(bool(trusted)),))

    def sort(self):
        self.rows.sort(key=lambda r: (r[0], -r[1]))

    def column(self, name, eps=None):
        i = PAIRING_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows if eps is None or np.isclose(r[1], eps)])

    def eps_values(self):
        return sorted({r[1] for r in self.rows}, reverse=True)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(PAIRING_COLUMNS)
            for r in self.rows:
                w.writerow([repr(v) for v in r[:-1]] + [r[-1]])

    @classmethod
    def from_csv(cls, path):
        out = cls()
        with open(path) as fh:
            rd = csv.reader(fh)
            header = next(rd)
            if tuple(header) != PAIRING_COLUMNS:
                raise ValueError(f"unexpected pairing columns {header}")
            for r in rd:
                out.rows.append(tuple(float(v) for v in r[:-1]) + (int(r[-1]),))
        return out


def residual_exponent(s, delta):
    return min(s - 1.0 - delta, 1.0)


def lyapunov_value(series: PairingSeries, ctx=None, guard=1e-14):
    """``(t, max_eps W / dr_ref^2)`` over the sampled scales, per time."""
    if len(series.eps_values()) < 3:
        raise ValueError("need at least 3 eps octaves")
    ts = sorted({r[0] for r in series.rows})
    vals = []
    for t in ts:
        rows = [r for r in series.rows if r[0] == t]
        ref = np.array([r[6] if ctx is None else ctx.reference.at(r[1]) for r in rows])
        if np.any(ref <= guard):
            raise ValueError("reference tail below guard threshold")
        vals.append(max(r[2] / d**2 for r, d in zip(rows, ref)))
    return np.array(ts), np.array(vals)


@dataclass
class GrowthRecord:
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def ratio(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.rhs > 0, self.lhs / self.rhs, np.nan)

    def min_ratio(self, trusted=None):
        r = self.ratio
        sel = np.isfinite(r) if trusted is None else (np.isfinite(r) & np.asarray(trusted, bool))
        return float(np.min(r[sel])) if sel.any() else float("nan")


def growth_terms(flow, ctx):
    """``(||D Phi||_inf, ||D Phi - I||_ctx)``; the adapted norm is the max over entries."""
    from .dyadic import adapted_norm
    J = flow.jacobian
    sup = float(_opnorm(J).max())
    g = flow.grid
    an = max(adapted_norm(forward(J[i, j] - (1.0 if i == j else 0.0)), g, ctx)
             for i in range(2) for j in range(2))
    return sup, an


def growth_inequality_check(times, jac_sup, adapted):
    """LHS ``||D Phi_t||_inf ||D Phi_t - I||_ctx``, RHS ``int_0^t ds / ||D Phi_s||_inf``."""
    t = np.asarray(times, float)
    js = np.asarray(jac_sup, float)
    lhs = js * np.asarray(adapted, float)
    inv = 1.0 / js
    rhs = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(t))])
    return GrowthRecord(t, lhs, rhs)


def fd_derivative(t, w):
    """Second-order finite differences (one-sided at the ends)."""
    return np.gradient(np.asarray(w, float), np.asarray(t, float), axis=0, edge_order=2)


@dataclass
class CascadeVerdicts:
    residual_slope: float
    required_slope: float
    kappa: dict
    monotone: dict
    t_trusted: float
    lyapunov_slope: float
    growth_min_ratio: float
    extra: dict = field(default_factory=dict)

    @property
    def identity_ok(self):
        return self.residual_slope >= self.required_slope

    @property
    def monotone_ok(self):
        return all(self.monotone.values())

    @property
    def growth_ok(self):
        return self.lyapunov_slope > 0 and self.growth_min_ratio > 0

    @property
    def passed(self):
        return self.identity_ok and self.monotone_ok and self.growth_ok

    def items(self):
        out = {
            "residual_slope": self.residual_slope,
            "required_slope": self.required_slope,
            "t_trusted": self.t_trusted,
            "untrusted_beyond": self.t_trusted,
            "lyapunov_slope": self.lyapunov_slope,
            "growth_min_ratio": self.growth_min_ratio,
            "identity_ok": self.identity_ok,
            "monotone_ok": self.monotone_ok,
            "growth_ok": self.growth_ok,
            "passed": self.passed,
        }
        for e, k in self.kappa.items():
            out[f"kappa[eps={e:g}]"] = k
        for e, m in self.monotone.items():
            out[f"monotone[eps={e:g}]"] = m
        out.update(self.extra)
        return out

    def to_text(self, path):
        with open(path, "w") as fh:
            for k, v in self.items().items():
                fh.write(f"{k} = {_fmt(v)}\n")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def trusted_until(series: PairingSeries):
    """Last time whose rows are all flagged trusted (the first time if none are)."""
    ts = sorted({r[0] for r in series.rows})
    last = ts[0] if ts else 0.0
    for t in ts:
        if not all(r[7] for r in series.rows if r[0] == t):
            break
        last = t
    return last


def cascade_report(series: PairingSeries, s, delta=0.1, growth: GrowthRecord | None = None,
                   t_trusted=None):
    """Fill the ``bound`` column and derive verdicts from a series with ``dWdt_fd`` set.

    Residual check: per scale, ``kappa(eps) = max_t |dW/dt - P| / (eps^r dr_ref^2)``
    over trusted times, ``r = min(s - 1 - delta, 1)``.  The fitted log2-slope of
    ``max_t |dW/dt - P| / dr_ref^2`` in ``eps`` must be at least ``r - 0.2``.
    Monotonicity: ``W`` may decrease by at most the residual budget
    ``kappa_max eps^r dr_ref^2`` integrated over each sampling interval.
    """
    series.sort()
    r = residual_exponent(s, delta)
    eps_vals = series.eps_values()
    if t_trusted is None:
        t_trusted = trusted_until(series)
    cut = t_trusted + 1e-12

    def rows_at(e):
        return [row for row in series.rows if np.isclose(row[1], e) and row[0] <= cut]

    kappa, resid_rel = {}, []
    for e in eps_vals:
        rows = rows_at(e)
        dr = rows[0][6]
        worst = max(abs(row[4] - row[3]) for row in rows)
        kappa[e] = worst / (e**r * dr**2)
        resid_rel.append(worst / dr**2)
    kmax = max(kappa.values())
    series.rows = [row[:5] + (kmax * row[1]**r * row[6] ** 2,) + row[6:] for row in series.rows]
    monotone = {}
    for e in eps_vals:
        rows = rows_at(e)
        W = np.array([row[2] for row in rows])
        t = np.array([row[0] for row in rows])
        budget = rows[0][5] * np.diff(t)
        monotone[e] = bool(np.all(np.diff(W) >= -budget))
    slope = _slope(np.log2(np.array(eps_vals)), np.array(resid_rel))
    ts, lv = lyapunov_value(series)
    sel = ts <= cut
    lslope = float(np.polyfit(ts[sel], lv[sel], 1)[0]) if sel.sum() >= 2 else float("nan")
    gmin = growth.min_ratio(growth.t <= cut) if growth is not None else float("nan")
    kv = np.array(list(kappa.values()))
    extra = {"kappa_spread": float(kv.max() / kv.min()) if kv.min() > 0 else float("inf")}
    return CascadeVerdicts(slope, r - 0.2, kappa, monotone, float(t_trusted), lslope, gmin,
                           extra)


def _slope(x, y):
    ok = y > 0
    if ok.sum() < 2:
        return float("inf")
    return float(np.polyfit(x[ok], np.log2(y[ok]), 1)[0])
