"""Seed handling shared by every stochastic routine."""

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x):
    """One round of the SplitMix64 finaliser on a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def mix_seed(master, *indices):
    """Derive a child seed from a master seed and any number of indices.

    ``mix_seed(s, i) == splitmix64(s ^ splitmix64(i))`` chained over the
    indices, so a sample's seed depends only on (master, index) and never
    on generation order.
    """
    x = int(master) & _MASK
    for i in indices:
        x = splitmix64(x ^ splitmix64(int(i) & _MASK))
    return x


def as_rng(seed):
    """Accept an int seed, ``None`` or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
