"""Counter-based deterministic random streams.

All Monte Carlo code derives one independent SplitMix64 stream per trial
from a master seed, so results are reproducible bit-for-bit regardless of
how trials are scheduled, and the compiled and pure-Python walkers consume
identical streams.
"""

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64(z):
    """SplitMix64 finalizer for uint64 scalars or arrays."""
    z = np.uint64(z) if np.isscalar(z) else z.astype(np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
    return z


def derive_seed(master, *indices):
    """Derive a sub-seed from a master seed and integer indices."""
    s = np.uint64(master & 0xFFFFFFFFFFFFFFFF)
    for ix in indices:
        with np.errstate(over="ignore"):
            s = mix64(s + _GAMMA + np.uint64(ix & 0xFFFFFFFFFFFFFFFF))
    return int(s)


def trial_states(master, trials, offset=0):
    """Initial SplitMix64 state per trial, as a uint64 array."""
    idx = np.arange(offset, offset + trials, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(np.uint64(master & 0xFFFFFFFFFFFFFFFF) + _GAMMA * (idx + np.uint64(1)))


def next_uniform(states):
    """Advance SplitMix64 states in place; return uniforms in [0, 1).

    Works on uint64 arrays (vectorized) and plain uint64 scalars alike.
    The conversion keeps the top 53 bits, matching the compiled kernel.
    """
    with np.errstate(over="ignore"):
        states += _GAMMA
        z = mix64(states)
    return (z >> np.uint64(11)).astype(np.float64) * 1.1102230246251565e-16


class SplitMix64:
    """Scalar stream with the same output as one lane of next_uniform."""

    def __init__(self, seed):
        self._state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)

    def uniform(self):
        with np.errstate(over="ignore"):
            self._state += _GAMMA
            z = mix64(self._state)
        return float(z >> np.uint64(11)) * 1.1102230246251565e-16

    def choice(self, cumweights):
        """Index into a cumulative weight array (need not be normalized)."""
        r = self.uniform() * cumweights[-1]
        for i, c in enumerate(cumweights):
            if r < c:
                return i
        return len(cumweights) - 1
