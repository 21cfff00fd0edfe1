import filecmp
import os

import numpy as np
import pytest

from paracascade.cli import main
from paracascade.dyadic import tail_profile
from paracascade.fourier_core import Grid2D, inverse, l2_norm
from paracascade.harness.config import ConfigError, RunConfig, load_config, parse_config
from paracascade.harness.data import DataError, DataSpec, generate_initial_data, powerlaw_field
from paracascade.harness.experiment import (StageError, gen_data, preset_config,
                                            run_experiment)
from paracascade.harness.io import SnapshotError, read_pcf1, read_rows, read_verdicts, write_pcf1
from paracascade.harness.rng import splitmix64, uniforms
from paracascade.harness.verify import verify


def test_splitmix_reference():
    assert int(splitmix64(0, 1)[0]) == 0xE220A8397B1DCDAF
    assert int(splitmix64(0, 3)[2]) == int(splitmix64(0, 1, start=2)[0])
    u = uniforms(2**64 - 1, 1000)
    assert u.min() >= 0 and u.max() < 1
    with pytest.raises(ValueError):
        splitmix64(-1, 1)


def test_config_parse_and_roundtrip(tmp_path):
    cfg = parse_config("grid.n = 64  # small\n\ndata.seed = 18446744073709551615\n")
    assert cfg["grid.n"] == 64 and cfg["data.seed"] == 2**64 - 1
    path = tmp_path / "c.txt"
    path.write_text(cfg.to_text())
    assert load_config(path) == cfg
    assert cfg.updated(**{"grid.n": 32})["grid.n"] == 32


@pytest.mark.parametrize("text,needle", [
    ("grid.n = 100", "grid.n"),
    ("grid.n = abc", "grid.n"),
    ("nope.key = 1", "nope.key"),
    ("grid.n 64", "line 1"),
    ("diag.chi_outer = 0.9\ndiag.chi_inner = 1.0", "diag.chi_outer"),
    ("diag.eps_min_exp = 1", "diag.eps_min_exp"),
    ("solver.dealias = maybe", "solver.dealias"),
    ("data.kind = file", "data.path"),
])
def test_config_errors_name_the_key(text, needle):
    with pytest.raises(ConfigError, match=needle.replace(".", r"\.")):
        parse_config(text)


def test_pcf1_roundtrip_and_errors(tmp_path):
    v = np.random.default_rng(0).normal(size=(16, 16))
    p = tmp_path / "f.pcf1"
    write_pcf1(p, v, 2 * np.pi)
    back, L = read_pcf1(p)
    assert np.array_equal(back, v) and L == 2 * np.pi
    assert os.path.getsize(p) == 16 + 8 * 256
    raw = p.read_bytes()
    (tmp_path / "bad").write_bytes(b"XXXX" + raw[4:])
    (tmp_path / "short").write_bytes(raw[:-8])
    for name, msg in (("bad", "magic"), ("short", "bytes")):
        with pytest.raises(SnapshotError, match=msg):
            read_pcf1(tmp_path / name)
    with pytest.raises(SnapshotError):
        write_pcf1(p, np.full((4, 4), np.nan), 1.0)


def test_data_tail_and_determinism():
    g = Grid2D(256)
    w, ctx = generate_initial_data(DataSpec("powerlaw", 1.5, 3), g)
    w2, _ = generate_initial_data(DataSpec("powerlaw", 1.5, 3), g)
    assert np.array_equal(w, w2)
    assert not np.array_equal(w, generate_initial_data(DataSpec("powerlaw", 1.5, 4), g)[0])
    assert abs(ctx.reference.fit_exponent(lo=1 / 32, hi=1 / 2) - 1.5) < 0.1
    assert l2_norm(w) == pytest.approx(1.0)


def test_bandlimited_tail_vanishes():
    g = Grid2D(64)
    w, ctx = generate_initial_data(DataSpec("bandlimited", 2.0, 1, band=6.0), g)
    assert ctx is None
    assert np.all(tail_profile(w, g, np.array([1 / 8, 1 / 16])).dr == 0)


def test_data_errors(tmp_path):
    with pytest.raises(DataError, match="data.kind"):
        DataSpec("noise")
    with pytest.raises(DataError, match="data.s"):
        DataSpec("powerlaw", 5.0)
    with pytest.raises(DataError, match="not resolvable"):
        generate_initial_data(DataSpec("powerlaw", 1.5), Grid2D(32))
    write_pcf1(tmp_path / "w.pcf1", np.zeros((16, 16)), 2 * np.pi)
    with pytest.raises(DataError, match="grid"):
        generate_initial_data(DataSpec("file", path=str(tmp_path / "w.pcf1")), Grid2D(64))


def test_file_kind_roundtrip(tmp_path):
    g = Grid2D(128)
    w = powerlaw_field(g, 2.0, 1) * g.dealias_mask
    write_pcf1(tmp_path / "w.pcf1", inverse(w), g.L)
    back, _ = generate_initial_data(DataSpec("file", path=str(tmp_path / "w.pcf1")), g)
    assert l2_norm(back - w) < 1e-14


def test_presets():
    assert preset_config("cascade-default")["grid.n"] == 256
    assert preset_config("smoke", **{"grid.n": 64})["grid.n"] == 64
    with pytest.raises(ConfigError, match="unknown preset"):
        preset_config("bogus")


def test_stage_error_names_stage(tmp_path):
    cfg = RunConfig({"grid.n": 16, "data.kind": "powerlaw"})
    with pytest.raises(StageError, match="gen-data"):
        gen_data(cfg, tmp_path)


def test_smoke_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    va, res = run_experiment(preset_config("smoke"), a)
    run_experiment(preset_config("smoke"), b)
    for name in ("pairing.csv", "runlog.csv", "verdicts.txt", "omega0.pcf1", "tail.csv",
                 "omega_t000100.pcf1", "disp1_t000200.pcf1"):
        assert filecmp.cmp(a / name, b / name, shallow=False), name
    assert va.passed
    rows = read_rows(a / "runlog.csv")
    assert rows[0]["t"] == 0 and rows[-1]["t"] == pytest.approx(0.2)
    assert max(r["det_drift"] for r in rows) < 1e-6


def test_steady_shear_pairings_vanish(tmp_path):
    cfg = preset_config("steady-shear", **{"solver.t_end": 0.2})
    verdicts, _ = run_experiment(cfg, tmp_path)
    assert verdicts is None
    v = read_verdicts(tmp_path / "verdicts.txt")
    assert v["passed"] == "true" and float(v["max_abs_W"]) == 0.0
    assert float(v["enstrophy_drift"]) < 1e-12


def test_cli_pipeline(tmp_path, capsys):
    out = str(tmp_path / "run")
    conf = tmp_path / "c.txt"
    conf.write_text("solver.t_end = 0.2\n")
    assert main(["gen-data", "--preset", "steady-shear", "--out", out]) == 0
    assert main(["evolve", "--preset", "steady-shear", "--config", str(conf), "--out", out]) == 0
    assert main(["diagnose", "--out", out]) == 0
    assert main(["report", "--out", out]) == 0
    assert "energy" in (tmp_path / "run" / "report.txt").read_text()
    assert load_config(tmp_path / "run" / "config.txt")["solver.t_end"] == 0.2


def test_cli_errors(tmp_path, capsys):
    bad = tmp_path / "c.txt"
    bad.write_text("grid.n = 100\n")
    assert main(["gen-data", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "grid.n" in capsys.readouterr().err
    assert main(["report", "--out", str(tmp_path / "missing")]) == 2
    with pytest.raises(SystemExit):
        main(["evolve", "--seed", "-1"])
    with pytest.raises(SystemExit):
        main(["verify", "nonsense"])


def test_verify_calculus_suite(tmp_path):
    ok, checks, text = verify("appendix-a", tmp_path / "v.txt")
    assert ok, text
    assert (tmp_path / "v.txt").read_text() == text
    assert {c.name for c in checks} >= {"partition_of_unity", "reconstruction"}


def test_verify_rates():
    ok, checks, text = verify("rates")
    assert ok, text
    assert len(checks) == 5
