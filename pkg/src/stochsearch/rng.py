"""Seeded random substreams.

Every random quantity in the package is drawn from a generator keyed by the
user seed plus a tuple of integers (purpose tag, replicate, candidate index),
so results do not depend on evaluation order.
"""

import numpy as np

# purpose tags for the first spawn-key slot
WEIGHTS = 0
DATA = 1
DESIGN = 2
LIMIT = 3
AUX = 4


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(ss)
