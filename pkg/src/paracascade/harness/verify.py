"""Named property suites with a key/value pass/fail summary."""
from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from ..cascade_diag import rate_check
from ..dyadic import DyadicPartition, bernstein_ratio, lp_block, lp_decompose
from ..fourier_core import Grid2D, dealiased_product, l2_norm
from ..paracalc import AdmissibleCutoff, SymbolRep, localization_leak, paraproduct, remainder
from .data import DataSpec, generate_initial_data, powerlaw_field


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def line(self):
        verdict = "pass" if self.passed else "fail"
        return f"{self.name} = {verdict} value={self.value!r} threshold={self.threshold!r}"


def _at_most(name, value, threshold):
    return Check(name, float(value), float(threshold), bool(value <= threshold))


def _within(name, value, target, tol):
    return Check(name, float(value), float(tol), bool(abs(value - target) <= tol))


def reconstruction_errors(n=128, pairs=20, seed=0, cutoff=AdmissibleCutoff()):
    """Relative L^2 error of ``T_f g + T_g f + R(f, g)`` against ``f g`` per pair."""
    g = Grid2D(n)
    errs = []
    for p in range(pairs):
        f = powerlaw_field(g, 1.2 + 0.1 * (p % 5), seed + 2 * p)
        h = powerlaw_field(g, 1.7 - 0.1 * (p % 5), seed + 2 * p + 1)
        full = dealiased_product(f, h, g)
        split = paraproduct(f, h, g, cutoff) + paraproduct(h, f, g, cutoff) + remainder(f, h, g, cutoff)
        errs.append(l2_norm(split - full) / l2_norm(full))
    return np.array(errs)


def suite_calculus(n=128, seed=0):
    g = Grid2D(n)
    part = DyadicPartition(g)
    f = powerlaw_field(g, 1.2, seed)
    h = powerlaw_field(g, 1.2, seed + 1)
    out = [_at_most("partition_of_unity", l2_norm(lp_decompose(f, g).sum(0) - f) / l2_norm(f),
                    1e-13)]
    worst = {"2_2": 0.0, "2_inf": 0.0, "2_inf_d1": 0.0}
    for k in range(1, part.kmax):
        b = lp_block(f, g, k)
        worst["2_2"] = max(worst["2_2"], bernstein_ratio(b, g, k))
        worst["2_inf"] = max(worst["2_inf"], bernstein_ratio(b, g, k, (0, 0), 2, "inf"))
        worst["2_inf_d1"] = max(worst["2_inf_d1"], bernstein_ratio(b, g, k, (1, 0), 2, "inf"))
    # analytic constants for the dilated annulus r <= 2^(k+1)
    out.append(_at_most("bernstein_2_2", worst["2_2"], 2.0))
    out.append(_at_most("bernstein_2_inf", worst["2_inf"], 2 * math.sqrt(math.pi)))
    out.append(_at_most("bernstein_2_inf_d1", worst["2_inf_d1"], 4 * math.sqrt(math.pi)))
    cut = AdmissibleCutoff()
    leak = max(localization_leak(f, h, g, j, cut) for j in range(3, part.kmax - 1))
    out.append(_at_most("paraproduct_localization", leak, 1e-13))
    out.append(_at_most("reconstruction", reconstruction_errors(n, 20, seed, cut).max(), 1e-12))
    return out


def rate_reports(n=256, s=1.5, seed=7, B=2.0):
    g = Grid2D(n)
    u, ctx = generate_initial_data(DataSpec("powerlaw", s, seed), g)
    cut = AdmissibleCutoff(B)
    eps = [2.0 ** -j for j in range(-1, 4)]
    principal = rate_check(SymbolRep.multiplier(None), u, u, g, eps, cutoff=cut)
    japanese = SymbolRep.multiplier(lambda a, b: 1.0 / np.sqrt(1.0 + a * a + b * b), order=-1)
    lower = rate_check(japanese, u, u, g, eps, cutoff=cut, m=-1)
    return ctx.reference, principal, lower


def suite_rates(n=256, s=1.5, seed=7):
    prof, principal, lower = rate_reports(n, s, seed)
    fit = prof.fit_exponent(lo=1 / 32, hi=1 / 2)
    out = [
        _within("tail_exponent", fit, s, 0.1),
        _within("pairing_exponent", principal.slope, 2 * s, 0.2),
        _within("subprincipal_gain", lower.slope - principal.slope, 1.0, 0.15),
    ]
    # the order -1 envelope carries the extra factor eps
    for label, env in (("principal", principal.envelope),
                       ("subprincipal", lower.envelope / lower.eps)):
        out.append(_at_most(f"envelope_spread_{label}", env.max() / env.min(), 10.0))
    return out


def suite_cascade(outdir=None, budget=600.0):
    from .experiment import preset_config, run_experiment
    t0 = time.time()
    own = outdir is None
    tmp = tempfile.mkdtemp(prefix="cascade-") if own else outdir
    verdicts, _ = run_experiment(preset_config("cascade-default"), tmp)
    wall = time.time() - t0
    out = [
        Check("residual_slope", verdicts.residual_slope, verdicts.required_slope,
              verdicts.identity_ok),
        Check("monotone", float(verdicts.monotone_ok), 1.0, verdicts.monotone_ok),
        Check("lyapunov_slope", verdicts.lyapunov_slope, 0.0, verdicts.lyapunov_slope > 0),
        Check("growth_min_ratio", verdicts.growth_min_ratio, 0.0, verdicts.growth_min_ratio > 0),
        _at_most("wall_seconds", wall, budget),
    ]
    return out


SUITES = {"appendix-a": suite_calculus, "rates": suite_rates, "cascade": suite_cascade}


def verify(suite, path=None):
    """Run a named suite; returns ``(all_passed, checks)`` and writes the summary if asked."""
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    t0 = time.time()
    checks = SUITES[suite]()
    ok = all(c.passed for c in checks)
    text = f"suite = {suite}\n" + "".join(c.line() + "\n" for c in checks)
    text += f"seconds = {time.time() - t0:.1f}\npassed = {'true' if ok else 'false'}\n"
    if path:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
    return ok, checks, text
