"""Seeded random-number streams.

Every stochastic routine in this package draws from a numpy ``Generator``
backed by the PCG64 bit generator, keyed through ``SeedSequence``.  A stream
is identified by a root seed plus an optional tuple of integer sub-keys
(estimator index, boosting stage, fold number, ...), so parallel estimators
can be fit in any order and still reproduce bit-identically.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *subkeys: int) -> np.random.Generator:
    """Return the PCG64 generator for ``(seed, *subkeys)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, subkeys)])))
