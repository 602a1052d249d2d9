"""Named, seed-derived random streams.

Every consumer draws from its own stream keyed by ``(seed, purpose, ...)`` so
results never depend on the order in which independent pieces run.
"""

import numpy as np

PARTITION = 0
CLIENT_SAMPLING = 1
CLIENT_UPDATE = 2
MODEL_INIT = 3
SYNTHETIC_DATA = 4
REDUCER = 5
SPLIT = 6


def stream(seed, *key):
    """Independent generator for ``key`` under master ``seed``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))
