# src/hodse/streams.py
"""
Counter-based random streams.

Every stream is a Philox generator keyed by (master seed, spawn key), so a
replication or bootstrap block draws the same numbers no matter which worker
runs it or in what order.
"""

import numpy as np

THETA = 0
REPLICATION = 1
BOOTSTRAP = 2
NOISE_CHECK = 3


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream ``key`` of master ``seed``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))
