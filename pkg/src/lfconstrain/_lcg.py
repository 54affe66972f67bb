"""Seeded 64-bit linear congruential generator.

x[n+1] = (A * x[n] + C) mod 2**64 with Knuth's MMIX constants.  Floats use
the top 53 bits.  Bulk draws are vectorized with jump-ahead doubling, so the
output is a pure function of (seed, draw index) on every platform.
"""

from __future__ import annotations

import numpy as np

A = 6364136223846793005
C = 1442695040888963407
MASK = (1 << 64) - 1

# stream tags
LAYER = 0x4C41594552
PROVIDER = 0x50524F56
QUERY = 0x5155455259


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


def derive(seed: int, *keys: int) -> int:
    s = splitmix64(seed & MASK)
    for k in keys:
        s = splitmix64(s ^ (k & MASK))
    return s


class Lcg64:
    def __init__(self, state: int):
        self.state = state & MASK

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` states as uint64."""
        out = np.empty(n, dtype=np.uint64)
        if n == 0:
            return out
        out[0] = (A * self.state + C) & MASK
        m, a_m, c_m = 1, A, C  # x[i+m] = a_m * x[i] + c_m
        while m < n:
            take = min(m, n - m)
            out[m:m + take] = out[:take] * np.uint64(a_m) + np.uint64(c_m)
            a_m, c_m = (a_m * a_m) & MASK, (c_m * a_m + c_m) & MASK
            m += take
        self.state = int(out[-1])
        return out

    def random(self, n: int) -> np.ndarray:
        """Uniform floats in [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        n = int(np.prod(shape))
        return (low + (high - low) * self.random(n)).reshape(shape)
