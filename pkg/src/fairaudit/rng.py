"""Counter-based pseudo-random generator used by every randomized routine.

The generator is SplitMix64: output i is a bit-mix of ``seed + i * GOLDEN``
(mod 2**64), so the stream is a pure function of (seed, counter). That makes
every consumer reproducible bit-for-bit across platforms and across scalar or
block-wise consumption. The reference stream for seed 42 is frozen in the
README and in tests/test_rng.py.
"""

from __future__ import annotations

import math

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1

_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# numpy scalars, kept as uint64 so vectorized arithmetic wraps mod 2**64
_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)

_INV53 = 2.0 ** -53


def mix64(z: int) -> int:
    """Scalar SplitMix64 finalizer (reference implementation)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return (z ^ (z >> 31)) & _MASK


def _mix_block(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U30)) * _U_M1
    z = (z ^ (z >> _U27)) * _U_M2
    return z ^ (z >> _U31)


def derive_seed(seed: int, index: int) -> int:
    """Deterministic sub-seed for replicate/worker ``index`` of ``seed``."""
    return mix64((seed & _MASK) ^ mix64(((index + 1) * GOLDEN) & _MASK))


class CounterRng:
    """Seeded stream of uniforms/normals with an explicit draw counter."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self.counter = 0

    def u64_block(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs."""
        start = self.counter + 1
        self.counter += n
        counters = np.arange(start, start + n, dtype=np.uint64)
        return _mix_block(np.uint64(self.seed) + counters * _U_GOLDEN)

    def next_u64(self) -> int:
        self.counter += 1
        return mix64((self.seed + self.counter * GOLDEN) & _MASK)

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1)."""
        return (self.u64_block(n) >> _U11).astype(np.float64) * _INV53

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _INV53

    def normals(self, n: int) -> np.ndarray:
        """``n`` standard normals via Box-Muller on consecutive uniform pairs."""
        m = (n + 1) // 2
        # u1 in (0, 1] so log(u1) is finite; u2 in [0, 1)
        u1 = ((self.u64_block(m) >> _U11).astype(np.float64) + 1.0) * _INV53
        u2 = (self.u64_block(m) >> _U11).astype(np.float64) * _INV53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * math.pi * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def integers(self, upper: int, n: int) -> np.ndarray:
        """``n`` integers uniform on [0, upper). ``upper`` must fit a double."""
        if upper <= 0:
            raise ValueError("upper must be positive")
        return np.floor(self.uniforms(n) * upper).astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """A uniform random permutation of range(n)."""
        return np.argsort(self.uniforms(n), kind="stable")
