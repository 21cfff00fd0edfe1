"""Command-line entry point: ``paracascade <subcommand> [flags]``.

Exit status: 0 on success, 1 when verdicts or a verify suite fail, 2 on
configuration errors or a failing stage.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .harness.config import MAX_U64, ConfigError, RunConfig, load_config
from .harness.experiment import (PRESETS, StageError, diagnose, evolve_and_pair, gen_data,
                                 preset_config, write_run_outputs)
from .harness.io import read_rows, read_verdicts

log = logging.getLogger("paracascade")


def _u64(text):
    v = int(text, 0)
    if not 0 <= v <= MAX_U64:
        raise argparse.ArgumentTypeError(f"seed {text} is not an unsigned 64-bit integer")
    return v


def _resolve_config(args, stored=None):
    """Preset, then config file, then flags.  ``stored`` is used when neither is given."""
    if args.preset:
        cfg = preset_config(args.preset)
    elif args.config is None and stored and os.path.exists(stored):
        cfg = load_config(stored)
    else:
        cfg = RunConfig()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    if args.seed is not None:
        cfg = cfg.updated(**{"data.seed": args.seed})
    if args.out:
        cfg = cfg.updated(**{"io.outdir": args.out})
    return cfg


def _save_config(cfg):
    os.makedirs(cfg["io.outdir"], exist_ok=True)
    with open(os.path.join(cfg["io.outdir"], "config.txt"), "w") as fh:
        fh.write(cfg.to_text())


def cmd_gen_data(args):
    cfg = _resolve_config(args)
    _save_config(cfg)
    gen_data(cfg, cfg["io.outdir"])
    print(f"wrote {os.path.join(cfg['io.outdir'], 'omega0.pcf1')}")
    return 0


def cmd_evolve(args):
    cfg = _resolve_config(args, stored=args.out and os.path.join(args.out, "config.txt"))
    _save_config(cfg)
    out = cfg["io.outdir"]
    grid, w0, ctx = gen_data(cfg, out)
    res = evolve_and_pair(cfg, out, grid, w0, ctx,
                          progress=lambda t: log.info("t = %.3f", t))
    write_run_outputs(out, res)
    print(f"evolved to t = {cfg['solver.t_end']:g} in {res.wall:.1f} s; wrote runlog.csv, pairing.csv")
    return 0


def cmd_diagnose(args):
    cfg = _resolve_config(args, stored=args.out and os.path.join(args.out, "config.txt"))
    verdicts = diagnose(cfg, cfg["io.outdir"])
    print(open(os.path.join(cfg["io.outdir"], "verdicts.txt")).read(), end="")
    return 0 if verdicts is None or verdicts.passed else 1


def cmd_verify(args):
    from .harness.verify import verify
    path = os.path.join(args.out, f"verify-{args.suite}.txt") if args.out else None
    ok, _, text = verify(args.suite, path)
    print(text, end="")
    return 0 if ok else 1


def cmd_report(args):
    out = args.out or _resolve_config(args)["io.outdir"]
    vpath = os.path.join(out, "verdicts.txt")
    rpath = os.path.join(out, "runlog.csv")
    if not os.path.exists(vpath):
        raise StageError("report", FileNotFoundError(f"{vpath} missing; run diagnose first"))
    verdicts = read_verdicts(vpath)
    rows = read_rows(rpath) if os.path.exists(rpath) else []
    lines = [f"run directory: {out}"]
    if rows:
        first, last = rows[0], rows[-1]
        lines.append(f"time span: {first['t']:g} .. {last['t']:g} ({len(rows)} diagnostic times)")
        for key in ("energy", "enstrophy"):
            lines.append(f"{key}: {first[key]:.12g} -> {last[key]:.12g}")
        lines.append(f"max det drift: {max(r['det_drift'] for r in rows):.3e}")
    for key in ("passed", "identity_ok", "monotone_ok", "growth_ok", "residual_slope",
                "required_slope", "lyapunov_slope", "growth_min_ratio", "untrusted_beyond"):
        if key in verdicts:
            lines.append(f"{key}: {verdicts[key]}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(out, "report.txt"), "w") as fh:
        fh.write(text)
    print(text, end="")
    return 0 if verdicts.get("passed") == "true" else 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--out", metavar="DIR", help="run directory (overrides io.outdir)")
    common.add_argument("--seed", type=_u64, metavar="U64", help="initial-data seed")
    common.add_argument("--preset", choices=sorted(PRESETS), metavar="NAME",
                        help=f"one of {', '.join(sorted(PRESETS))}")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="paracascade", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="write omega0.pcf1 and tail tables")
    sub.add_parser("evolve", parents=[common], help="lockstep solve; write runlog and pairings")
    sub.add_parser("diagnose", parents=[common], help="verdicts from pairing.csv and runlog.csv")
    v = sub.add_parser("verify", parents=[common], help="run a named property suite")
    v.add_argument("suite", choices=("appendix-a", "rates", "cascade"))
    sub.add_parser("report", parents=[common], help="summarize a diagnosed run directory")
    return p


COMMANDS = {"gen-data": cmd_gen_data, "evolve": cmd_evolve, "diagnose": cmd_diagnose,
            "verify": cmd_verify, "report": cmd_report}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
