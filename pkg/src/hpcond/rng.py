"""Seeded random streams.

Every stream is a Philox (counter-based) generator keyed by the master seed
plus a tuple of integer spawn keys, so independent workers can derive their
own stream without coordinating and results do not depend on scheduling.
"""

import numpy as np

__all__ = ["make_rng", "spawn"]

MAX_SEED = 2**64 - 1


def make_rng(seed, *keys):
    """Return a ``numpy.random.Generator`` for ``(seed, *keys)``.

    Parameters
    ----------
    seed : int
        Master seed, 0 <= seed < 2**64.
    *keys : int
        Spawn path identifying the sub-stream.
    """
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def spawn(seed, count, *prefix):
    """Return ``count`` independent generators under the spawn path ``prefix``."""
    return [make_rng(seed, *prefix, i) for i in range(count)]
