"""Flat ``key = value`` run configuration.

Lines are ``dotted.key = value``; ``#`` starts a comment.  Unknown keys and
out-of-range values are rejected with the key named in the message.
"""
from __future__ import annotations

import math

MAX_U64 = (1 << 64) - 1


class ConfigError(ValueError):
    pass


def _pow2(v):
    return v >= 16 and not v & (v - 1)


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key: (parser, default, validator, requirement text)
SCHEMA = {
    "grid.n": (int, 256, _pow2, "a power of two >= 16"),
    "grid.L": (float, 2 * math.pi, lambda v: v > 0, "positive"),
    "solver.dt": (float, 1e-3, lambda v: 0 < v <= 0.1, "in (0, 0.1]"),
    "solver.t_end": (float, 2.0, lambda v: 0 <= v <= 100, "in [0, 100]"),
    "solver.alpha": (float, 2.0, lambda v: 1 < v <= 2, "in (1, 2]"),
    "solver.dealias": (_bool, True, lambda v: True, "a boolean"),
    "solver.flow_every": (int, 10, lambda v: v >= 2 and v % 2 == 0, "an even integer >= 2"),
    "data.kind": (str, "shear_plus_powerlaw",
                  lambda v: v in ("powerlaw", "shear_plus_powerlaw", "bandlimited", "file"),
                  "one of powerlaw, shear_plus_powerlaw, bandlimited, file"),
    "data.s": (float, 2.5, lambda v: 1 < v <= 4, "in (1, 4]"),
    "data.seed": (int, 0, lambda v: 0 <= v <= MAX_U64, "an unsigned 64-bit integer"),
    "data.amplitude": (float, 0.1, lambda v: v >= 0, "non-negative"),
    "data.shear": (float, 0.25, lambda v: v >= 0, "non-negative"),
    "data.band": (float, 8.0, lambda v: v > 0, "positive"),
    "data.path": (str, "", lambda v: True, "a path"),
    "para.B": (float, 2.0, lambda v: v > 1, "greater than 1"),
    "para.b": (float, 1.0, lambda v: v > 0, "positive"),
    "para.N0": (int, 0, lambda v: 0 <= v <= 8, "in [0, 8] (0 derives it from B)"),
    "para.n_theta": (int, 32, lambda v: v in (8, 16, 32, 64), "one of 8, 16, 32, 64"),
    "para.oversample": (int, 4, lambda v: 1 <= v <= 16, "in [1, 16]"),
    "para.interp": (str, "nufft", lambda v: v in ("nufft", "lagrange"), "nufft or lagrange"),
    "para.interp_order": (int, 6, lambda v: 2 <= v <= 16, "in [2, 16]"),
    "diag.eps_min_exp": (int, 6, lambda v: 0 <= v <= 20, "in [0, 20]"),
    "diag.eps_max_exp": (int, 3, lambda v: 0 <= v <= 20, "in [0, 20]"),
    "diag.chi_inner": (float, 1.0, lambda v: v >= 1, ">= 1"),
    "diag.chi_outer": (float, 4.0 / 3.0, lambda v: v > 1, "> 1"),
    "diag.delta": (float, 0.1, lambda v: 0 < v < 1, "in (0, 1)"),
    "diag.every": (float, 0.1, lambda v: v > 0, "positive"),
    "diag.trust_dealias": (float, 1e-6, lambda v: v > 0, "positive"),
    "diag.trust_det": (float, 1e-3, lambda v: v > 0, "positive"),
    "io.outdir": (str, "run", lambda v: bool(v), "non-empty"),
    "io.snapshot_every": (float, 0.5, lambda v: v > 0, "positive"),
}


class RunConfig:
    """Validated mapping from dotted keys to typed values."""

    def __init__(self, values=None):
        self._v = {k: spec[1] for k, spec in SCHEMA.items()}
        for k, v in (values or {}).items():
            self.set(k, v)
        self.validate()

    def set(self, key, value):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        parser, _, check, need = SCHEMA[key]
        try:
            v = parser(value) if not isinstance(value, str) or parser is not str else value
            if isinstance(value, str) and parser is not str:
                v = parser(value.strip())
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: cannot parse {value!r}; expected {need}") from None
        if not check(v):
            raise ConfigError(f"{key}: value {v!r} out of range; must be {need}")
        self._v[key] = v

    def validate(self):
        if self["diag.chi_outer"] <= self["diag.chi_inner"]:
            raise ConfigError("diag.chi_outer: must exceed diag.chi_inner")
        if self["diag.eps_min_exp"] < self["diag.eps_max_exp"]:
            raise ConfigError("diag.eps_min_exp: must be >= diag.eps_max_exp")
        if self["data.kind"] == "file" and not self["data.path"]:
            raise ConfigError("data.path: required when data.kind = file")

    def __getitem__(self, key):
        return self._v[key]

    def items(self):
        return self._v.items()

    def updated(self, **dotted):
        vals = dict(self._v)
        vals.update(dotted)
        return RunConfig(vals)

    def to_text(self):
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self._v.items())

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self._v == other._v


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def parse_config(text, base=None):
    values = dict(base.items()) if base is not None else {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r} (line {lineno})")
        values[key] = value.strip()
    return RunConfig(values)


def load_config(path, base=None):
    with open(path) as fh:
        return parse_config(fh.read(), base)
