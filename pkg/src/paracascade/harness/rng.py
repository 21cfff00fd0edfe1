"""Counter-based splitmix64 generator.

Draw ``i`` (``i = 0, 1, ...``) of seed ``s`` is ``mix(s + (i + 1) * G)`` with
``G = 0x9E3779B97F4A7C15`` and the splitmix64 finalizer

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

all arithmetic modulo 2^64.  Uniforms in ``[0, 1)`` are ``(z >> 11) * 2^-53``.
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1


def splitmix64(seed, count, start=0):
    """``count`` raw 64-bit outputs beginning at draw index ``start``."""
    if not 0 <= int(seed) <= MASK64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    with np.errstate(over="ignore"):
        i = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        z = np.uint64(int(seed)) + i * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * M1
        z = (z ^ (z >> np.uint64(27))) * M2
        return z ^ (z >> np.uint64(31))


def uniforms(seed, count, start=0):
    """53-bit uniforms in ``[0, 1)``."""
    return (splitmix64(seed, count, start) >> np.uint64(11)).astype(np.float64) * 2.0**-53
