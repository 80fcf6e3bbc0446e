"""Counter-based uniform variates.

Each variate is a pure function of ``(seed, trial, stream)``: the SplitMix64
output function applied to ``key + (trial * n_streams + stream + 1) * GAMMA``,
where ``key`` is the mixed seed. Any subset of trials can therefore be
generated in any order, or in parallel, with identical results.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1


def _mix_int(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, trials, n_streams: int) -> np.ndarray:
    """Array of shape ``(len(trials), n_streams)`` of doubles in [0, 1)."""
    key = np.uint64(_mix_int(int(seed) & MASK64))
    t = np.asarray(trials, dtype=np.uint64)
    counter = t[:, None] * np.uint64(n_streams) + np.arange(1, n_streams + 1, dtype=np.uint64)
    bits = _mix(key + counter * np.uint64(GAMMA))
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
