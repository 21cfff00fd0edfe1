"""Acceptance criteria 1-9 at their stated tolerances."""
import time

import numpy as np
import pytest

import paracascade.euler as euler
from paracascade.cascade_diag import ChiCutoff
from paracascade.dyadic import (DyadicPartition, adapted_norm, dyadic_adapted_norm,
                                lowpass_adapted_norm, slow_varying_table, tail_profile)
from paracascade.euler import SolverState, enstrophy, energy, run_lockstep, step_rk4
from paracascade.fourier_core import Grid2D, forward, fractional_velocity, inverse, l2_norm
from paracascade.harness.data import generate_initial_data, powerlaw_field
from paracascade.harness.experiment import _data_spec, preset_config, run_experiment
from paracascade.harness.verify import rate_reports, reconstruction_errors
from paracascade.paracalc import (AdmissibleCutoff, DiffeoMap, commutator_check,
                                  localization_leak, paracompose, paraproduct)


def test_criterion_1_reconstruction(acceptance):
    t0 = time.time()
    err = reconstruction_errors(n=128, pairs=20, seed=0).max()
    wall = time.time() - t0
    ok = err <= 1e-12 and wall < 30
    acceptance(1, "reconstruction", ok, f"max rel err {err:.2e}, {wall:.1f} s")
    assert ok


def test_criterion_2_localization(acceptance):
    g = Grid2D(128)
    f, h = powerlaw_field(g, 1.2, 0), powerlaw_field(g, 1.2, 1)
    kmax = DyadicPartition(g).kmax
    leaks = []
    for B in (2.0, 4.0):
        cut = AdmissibleCutoff(B)
        leaks += [localization_leak(f, h, g, j, cut) for j in range(3, kmax - 1)]
    worst = max(leaks)
    ok = worst <= 1e-13
    acceptance(2, "localization", ok, f"max leaked mass {worst:.2e} over j = 3..{kmax - 2}")
    assert ok


@pytest.mark.slow
def test_criterion_3_conservation(acceptance):
    cfg = preset_config("cascade-default")
    g = Grid2D(256)
    w0, _ = generate_initial_data(_data_spec(cfg), g)
    rec = []
    t0 = time.time()
    run_lockstep(SolverState(w0, g), 2.0, 1e-3, 10,
                 lambda st, fl: rec.append((energy(st), enstrophy(st), fl.det_drift)))
    wall = time.time() - t0
    r = np.array(rec)
    e_drift = np.abs(r[:, 0] / r[0, 0] - 1).max()
    z_drift = np.abs(r[:, 1] / r[0, 1] - 1).max()
    det = r[:, 2].max()
    ok = e_drift <= 1e-6 and z_drift <= 1e-6 and det <= 1e-4 and wall < 300
    acceptance(3, "conservation", ok, f"energy {e_drift:.1e}, enstrophy {z_drift:.1e}, "
               f"det {det:.1e}, {wall:.0f} s")
    assert ok


def test_criterion_4_frozen_shear(acceptance):
    g = Grid2D(128)
    x1, x2 = g.x
    # omega = cos x2 gives u = (-sin x2, 0): Phi_t = (x1 - t sin x2, x2)
    _, flow = run_lockstep(SolverState(forward(np.cos(x2)), g), 1.0, 1e-3, 10)
    t = flow.t
    c = t * np.cos(x2)
    one, zero = np.ones(g.shape), np.zeros(g.shape)
    disp = np.stack([-t * np.sin(x2), zero])
    jac = np.array([[one, -c], [zero, one]])
    inv = np.array([[one, c], [zero, one]])
    errs = (np.abs(flow.displacement - disp).max(), np.abs(flow.jacobian - jac).max(),
            np.abs(flow.inverse_jacobian - inv).max())
    ok = max(errs) <= 1e-8
    acceptance(4, "frozen shear", ok, "map {:.1e}, jacobian {:.1e}, inverse {:.1e}".format(*errs))
    assert ok


def test_criterion_5_rates(acceptance):
    prof, principal, lower = rate_reports(n=256, s=1.5, seed=7, B=2.0)
    lo, hi = 1 / 32, 1 / 2
    tail = prof.fit_exponent(lo=lo, hi=hi)
    gain = lower.slope - principal.slope
    decades = np.log10(hi / lo)
    ok = (abs(tail - 1.5) <= 0.1 and decades >= 1 and abs(principal.slope - 3.0) <= 0.2
          and abs(gain - 1.0) <= 0.15)
    acceptance(5, "tail and rates", ok, f"tail {tail:.3f} over {decades:.1f} decades, "
               f"pairing {principal.slope:.3f}, subprincipal gain {gain:.3f}")
    assert ok


@pytest.fixture(scope="module")
def cascade_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("cascade")
    t0 = time.time()
    verdicts, res = run_experiment(preset_config("cascade-default"), out)
    return verdicts, time.time() - t0


@pytest.mark.slow
def test_criterion_6_pairing_identity(acceptance, cascade_run):
    v, wall = cascade_run
    ok = v.identity_ok and v.monotone_ok and wall < 600
    acceptance(6, "pairing identity", ok,
               f"residual slope {v.residual_slope:.2f} vs required {v.required_slope:.2f}, "
               f"monotone {v.monotone_ok}, trusted to t = {v.t_trusted:g}, {wall:.0f} s")
    assert ok


@pytest.mark.slow
def test_criterion_7_renormalized_growth(acceptance, cascade_run):
    v, _ = cascade_run
    ok = v.lyapunov_slope > 0 and v.growth_min_ratio > 0
    acceptance(7, "renormalized growth", ok, f"lyapunov slope {v.lyapunov_slope:.3f}, "
               f"growth ratio min {v.growth_min_ratio:.3f}")
    assert ok


def _shear_map(g, t):
    d = np.zeros((2,) + g.shape)
    d[0] = t * np.sin(g.x[1])
    return DiffeoMap(g, d)


def _adapted_constants(n):
    g = Grid2D(n)
    ctx = slow_varying_table(tail_profile(powerlaw_field(g, 1.5, 0), g))
    f = inverse(powerlaw_field(g, 3.0, 1))
    h = powerlaw_field(g, 1.5, 2)
    para = adapted_norm(paraproduct(forward(f), h, g), g, ctx) / (
        np.abs(f).max() * adapted_norm(h, g, ctx))
    comp = [adapted_norm(paracompose(_shear_map(g, t), h), g, ctx) / adapted_norm(h, g, ctx)
            for t in (0.25, 0.5, 1.0)]
    return np.array([para] + comp)


def test_criterion_8_norm_machinery(acceptance):
    g = Grid2D(128)
    ctx = slow_varying_table(tail_profile(powerlaw_field(g, 1.5, 0), g))
    ratios = []
    for seed in range(20):
        f = powerlaw_field(g, 1.5 + 0.05 * (seed % 10), 100 + seed)
        a = adapted_norm(f, g, ctx)
        ratios.append((dyadic_adapted_norm(f, g, ctx) / a, lowpass_adapted_norm(f, g, ctx) / a))
    r = np.array(ratios)
    equiv = max(col.max() / col.min() for col in r.T)

    g2 = Grid2D(256)
    w = powerlaw_field(g2, 1.5, 3)
    u = np.zeros((2,) + g2.shape, complex)
    u[0, 0, 1], u[0, 0, -1] = -0.5j, 0.5j
    comm = [commutator_check(u, w, g2, 2.0**-j, ChiCutoff(), AdmissibleCutoff(2.0))
            for j in range(3, 7)]
    comm_env = max(comm) / min(comm)

    c128, c256 = _adapted_constants(128), _adapted_constants(256)
    drift = float(np.max(np.maximum(c128, c256) / np.minimum(c128, c256)))
    ok = equiv <= 10 and comm_env <= 10 and drift <= 1.5
    acceptance(8, "norm machinery", ok, f"equivalence spread {equiv:.2f}, commutator spread "
               f"{comm_env:.2f}, bound constants 128 vs 256 within x{drift:.3f}")
    assert ok


def test_criterion_9_gsqg_reduction(acceptance, monkeypatch):
    g = Grid2D(128)
    w = powerlaw_field(g, 2.5, 4) * 10
    state = SolverState(w, g, alpha=2.0)
    ref = step_rk4(state, 1e-3).omega_hat
    monkeypatch.setattr(euler, "velocity", lambda wh, grid, a: fractional_velocity(wh, grid, a))
    gsqg = step_rk4(state, 1e-3).omega_hat
    rel = l2_norm(gsqg - ref) / l2_norm(ref)
    ok = rel <= 1e-12
    acceptance(9, "gSQG reduction", ok, f"one-step rel diff {rel:.1e}")
    assert ok
