"""Presets, the end-to-end run and the verification suites."""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from ..cascade_diag import (ChiCutoff, PairingSeries, cascade_report, fd_derivative,
                            growth_inequality_check, growth_terms, lyapunov_P, lyapunov_W)
from ..dyadic import tail_profile
from ..euler import SolverState, invariants_report, run_lockstep
from ..fourier_core import Grid2D, inverse
from ..interp import SpectralInterpolator
from ..paracalc import AdmissibleCutoff, _opnorm
from .config import ConfigError, RunConfig
from .data import DataSpec, generate_initial_data
from .io import RUNLOG_COLUMNS, read_rows, write_pcf1, write_rows

PRESETS = {
    "cascade-default": {
        "grid.n": 256, "solver.dt": 1e-3, "solver.t_end": 2.0, "solver.flow_every": 10,
        "data.kind": "shear_plus_powerlaw", "data.s": 2.5, "data.amplitude": 0.1,
        "data.shear": 0.25, "para.B": 2.0, "para.n_theta": 32,
        "diag.eps_max_exp": 3, "diag.eps_min_exp": 6, "diag.chi_inner": 1.0,
        "diag.chi_outer": 4.0 / 3.0, "diag.delta": 0.1, "diag.every": 0.1,
        "io.snapshot_every": 0.5,
    },
    "steady-shear": {
        "grid.n": 128, "solver.dt": 1e-3, "solver.t_end": 1.0,
        "data.kind": "shear_plus_powerlaw", "data.amplitude": 0.0, "data.shear": 1.0,
        "para.B": 2.0, "diag.eps_max_exp": 3, "diag.eps_min_exp": 5, "diag.every": 0.1,
        "io.snapshot_every": 0.5,
    },
    "smoke": {
        "grid.n": 128, "solver.dt": 2e-3, "solver.t_end": 0.2, "solver.flow_every": 10,
        "data.kind": "shear_plus_powerlaw", "data.s": 2.5, "data.amplitude": 0.1,
        "data.shear": 0.25, "para.B": 2.0, "para.n_theta": 32,
        "diag.eps_max_exp": 2, "diag.eps_min_exp": 5, "diag.every": 0.04,
        "io.snapshot_every": 0.1,
    },
}


class StageError(RuntimeError):
    def __init__(self, stage, err):
        super().__init__(f"stage {stage!r} failed: {err}")
        self.stage = stage


def preset_config(name, **overrides):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    vals = dict(PRESETS[name])
    vals.update(overrides)
    return RunConfig(vals)


def _cutoff(cfg):
    return AdmissibleCutoff(cfg["para.B"], cfg["para.b"], cfg["para.N0"] or None)


def _eps_list(cfg, grid):
    scale = grid.L / (2 * np.pi)
    return [scale * 2.0 ** -j for j in range(cfg["diag.eps_max_exp"], cfg["diag.eps_min_exp"] + 1)]


def _interp(cfg, grid):
    return SpectralInterpolator(grid, cfg["para.interp"], cfg["para.oversample"],
                                cfg["para.interp_order"])


def _data_spec(cfg):
    return DataSpec(cfg["data.kind"], cfg["data.s"], cfg["data.seed"], cfg["data.amplitude"],
                    cfg["data.band"], cfg["data.shear"], cfg["data.path"])


def _snap_name(prefix, t):
    return f"{prefix}_t{int(round(t * 1000)):06d}.pcf1"


def gen_data(cfg: RunConfig, outdir):
    """Stage ``gen-data``: initial vorticity snapshot plus its tail tables."""
    os.makedirs(outdir, exist_ok=True)
    grid = Grid2D(cfg["grid.n"], cfg["grid.L"])
    spec = _data_spec(cfg)
    try:
        if spec.amplitude == 0 and spec.kind == "shear_plus_powerlaw":
            m1, m2 = grid.index
            w0 = 0.5 * spec.shear * ((m1 == 0) & (np.abs(m2) == 1)).astype(complex)
            ctx = None
        else:
            w0, ctx = generate_initial_data(spec, grid)
    except Exception as e:
        raise StageError("gen-data", e) from e
    write_pcf1(os.path.join(outdir, "omega0.pcf1"), inverse(w0), grid.L)
    tail_profile(w0, grid).to_csv(os.path.join(outdir, "tail.csv"))
    if ctx is not None:
        ctx.to_csv(os.path.join(outdir, "slow_varying.csv"))
    return grid, w0, ctx


@dataclass
class EvolveResult:
    runlog: list
    series: PairingSeries
    growth_t: list = field(default_factory=list)
    growth_sup: list = field(default_factory=list)
    growth_adapted: list = field(default_factory=list)
    wall: float = 0.0


def evolve_and_pair(cfg: RunConfig, outdir, grid, w0, ctx, progress=None):
    """Stage ``evolve``: lockstep solve with W on every flow step and P at the diagnostic cadence."""
    cut = _cutoff(cfg)
    chi = ChiCutoff(cfg["diag.chi_inner"], cfg["diag.chi_outer"])
    eps = _eps_list(cfg, grid)
    alpha = cfg["solver.alpha"]
    dt = cfg["solver.dt"]
    h = dt * cfg["solver.flow_every"]
    diag_every = max(1, int(round(cfg["diag.every"] / h)))
    snap_every = max(1, int(round(cfg["io.snapshot_every"] / h)))
    dr_ref = tail_profile(w0, grid, np.array(eps)).dr
    tW, Wfine, diag = [], [], []
    runlog = []
    growth = ([], [], [])
    count = [0]
    peak = 0.5 * (chi.r0 + chi.r1) / min(eps)

    def on_flow(state, flow):
        k = count[0]
        count[0] += 1
        tW.append(flow.t)
        Wfine.append(lyapunov_W(flow, w0, chi, eps, cut, alpha))
        if k % snap_every == 0:
            write_pcf1(os.path.join(outdir, _snap_name("omega", flow.t)),
                       inverse(state.omega_hat), grid.L)
            for i in range(2):
                write_pcf1(os.path.join(outdir, _snap_name(f"disp{i + 1}", flow.t)),
                           flow.displacement[i], grid.L)
        if k % diag_every:
            return
        P, mass = lyapunov_P(flow, w0, chi, eps, cut, alpha, cfg["para.n_theta"])
        rec = invariants_report(state, ctx)
        a_sup = float(_opnorm(flow.inverse_jacobian).max())
        rec.update({"det_drift": flow.det_drift, "alias_mass": flow.alias_mass,
                    "inv_jac_sup": a_sup, "symbol_mass": mass,
                    "image_radius": peak * a_sup})
        if ctx is not None:
            sup, an = growth_terms(flow, ctx)
            rec.update({"jac_sup": sup, "jac_adapted": an})
            growth[0].append(flow.t)
            growth[1].append(sup)
            growth[2].append(an)
        rec.setdefault("adapted_norm", float("nan"))
        rec.setdefault("adapted_norm_dyadic", float("nan"))
        runlog.append(rec)
        trusted = (rec["dealias_mass"] < cfg["diag.trust_dealias"]
                   and rec["det_drift"] < cfg["diag.trust_det"]
                   and rec["image_radius"] <= grid.kmax_resolved)
        diag.append((k, flow.t, P, trusted))
        if progress:
            progress(flow.t)

    t0 = time.time()
    state = SolverState(w0, grid, 0.0, alpha, cfg["solver.dealias"])
    try:
        run_lockstep(state, cfg["solver.t_end"], dt, cfg["solver.flow_every"], on_flow,
                     _interp(cfg, grid))
    except Exception as e:
        raise StageError("evolve", e) from e
    tW = np.array(tW)
    Wfine = np.array(Wfine)
    dWdt = fd_derivative(tW, Wfine) if tW.size >= 3 else np.zeros_like(Wfine)
    series = PairingSeries(meta={"dt": dt, "flow_step": h, "n_theta": cfg["para.n_theta"]})
    # a run stays trusted until the first unhealthy diagnostic time
    ok = True
    for k, t, P, trusted in diag:
        ok = ok and trusted
        for j, e in enumerate(eps):
            series.append(t, e, Wfine[k, j], P[j], dWdt[k, j], float("nan"), dr_ref[j], ok)
    series.meta["symbol_mass"] = max((r["symbol_mass"] for r in runlog), default=0.0)
    return EvolveResult(runlog, series, *growth, wall=time.time() - t0)


RUNLOG_EXTRA = ("alias_mass", "inv_jac_sup", "image_radius", "symbol_mass", "jac_sup",
                "jac_adapted")


def write_run_outputs(outdir, res: EvolveResult):
    cols = RUNLOG_COLUMNS + tuple(c for c in RUNLOG_EXTRA if res.runlog and c in res.runlog[0])
    write_rows(os.path.join(outdir, "runlog.csv"), cols, res.runlog)
    res.series.to_csv(os.path.join(outdir, "pairing.csv"))


def diagnose(cfg: RunConfig, outdir):
    """Stage ``diagnose``: verdicts from ``pairing.csv`` and ``runlog.csv``."""
    try:
        series = PairingSeries.from_csv(os.path.join(outdir, "pairing.csv"))
        rows = read_rows(os.path.join(outdir, "runlog.csv"))
        growth = None
        if rows and "jac_sup" in rows[0]:
            growth = growth_inequality_check([r["t"] for r in rows], [r["jac_sup"] for r in rows],
                                             [r["jac_adapted"] for r in rows])
        drs = series.column("dr_ref")
        if drs.size and np.all(drs > 0):
            verdicts = cascade_report(series, cfg["data.s"], cfg["diag.delta"], growth)
        else:
            verdicts = None
    except Exception as e:
        raise StageError("diagnose", e) from e
    series.to_csv(os.path.join(outdir, "pairing.csv"))
    health = {
        "energy_drift": _drift(rows, "energy"),
        "enstrophy_drift": _drift(rows, "enstrophy"),
        "max_det_drift": max((r["det_drift"] for r in rows), default=0.0),
    }
    path = os.path.join(outdir, "verdicts.txt")
    if verdicts is None:
        with open(path, "w") as fh:
            fh.write("passed = true\nnote = reference tail empty; pairings vanish identically\n")
            fh.write(f"max_abs_W = {float(np.max(np.abs(series.column('W')), initial=0.0))!r}\n")
            fh.write(f"max_abs_P = {float(np.max(np.abs(series.column('P')), initial=0.0))!r}\n")
            fh.write("".join(f"{k} = {v!r}\n" for k, v in health.items()))
        return None
    verdicts.extra.update(health)
    verdicts.to_text(path)
    return verdicts


def _drift(rows, key):
    v = np.array([r[key] for r in rows])
    return float(np.max(np.abs(v - v[0])) / abs(v[0])) if v.size and v[0] else 0.0


def run_experiment(cfg: RunConfig, outdir=None, progress=None):
    """Full pipeline; returns ``(verdicts or None, EvolveResult)``."""
    outdir = outdir or cfg["io.outdir"]
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "config.txt"), "w") as fh:
        fh.write(cfg.to_text())
    grid, w0, ctx = gen_data(cfg, outdir)
    res = evolve_and_pair(cfg, outdir, grid, w0, ctx, progress)
    write_run_outputs(outdir, res)
    return diagnose(cfg, outdir), res
