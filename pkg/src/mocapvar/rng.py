"""Counter-based random numbers.

Every draw is a pure function of ``(key, counter)``: the key is derived from
the seed and a stream path (for example ``(point_index,)``) and the counter
enumerates draws within the stream. The generator is SplitMix64 evaluated at
arbitrary positions, so any trial can be reproduced in isolation and work can
be split across workers without changing a single bit of the output.

Uniforms use the top 53 bits, offset by half an ulp so they lie strictly in
(0, 1). Normals are the inverse normal CDF of those uniforms.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _mix_int(x: int) -> int:
    return int(_mix(np.array([x & _MASK], dtype=np.uint64))[0])


class CounterRNG:
    """Keyed, random-access SplitMix64 stream."""

    def __init__(self, seed: int = 0, _key: int = None):
        self.seed = int(seed)
        self.key = _mix_int(self.seed) if _key is None else _key

    def child(self, *path: int) -> "CounterRNG":
        """Independent sub-stream addressed by integer ``path``."""
        key = self.key
        for p in path:
            key = _mix_int(key ^ _mix_int((int(p) + 0x632BE59BD9B4E019) & _MASK))
        return CounterRNG(self.seed, key)

    def bits(self, counters) -> np.ndarray:
        c = np.asarray(counters, dtype=np.uint64)
        with np.errstate(over="ignore"):
            return _mix(np.uint64(self.key) + (c + np.uint64(1)) * _GAMMA)

    def uniform(self, counters) -> np.ndarray:
        b = self.bits(counters) >> np.uint64(11)
        return (b.astype(np.float64) + 0.5) * 2.0**-53

    def normal(self, counters) -> np.ndarray:
        return ndtri(self.uniform(counters))

    def uniform_block(self, n: int, offset: int = 0) -> np.ndarray:
        return self.uniform(np.arange(offset, offset + n, dtype=np.uint64))

    def trial_normals(self, trials, width: int) -> np.ndarray:
        """Normals of shape ``(len(trials), width)``; row ``k`` depends only on ``trials[k]``."""
        t = np.asarray(trials, dtype=np.uint64)[:, None]
        return self.normal(t * np.uint64(width) + np.arange(width, dtype=np.uint64)[None, :])
