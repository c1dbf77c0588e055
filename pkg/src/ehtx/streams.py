"""Counter-based random streams: independent, order-free, reproducible.

Every random quantity in an experiment is drawn from its own Philox stream
keyed by (seed, trial, variable id), so realizations do not depend on how
many policies run, in which order, or on any earlier draws.  Variable ids:

    0   harvested powers of a trial
    1   channel gains of a trial
    16  harvested powers of a fitting trial (constant-ratio policy search)
    17  channel gains of a fitting trial
"""

from __future__ import annotations

import numpy as np

VAR_HARVEST = 0
VAR_GAIN = 1
VAR_FIT_HARVEST = 16
VAR_FIT_GAIN = 17

_MASK = (1 << 64) - 1


def stream(seed: int, trial: int, variable: int) -> np.random.Generator:
    """Generator for one (seed, trial, variable) stream."""
    key = np.array([seed & _MASK, ((trial << 8) | (variable & 0xFF)) & _MASK],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def exponential_unit_mean(gen: np.random.Generator, n: int) -> np.ndarray:
    """Unit-mean exponentials via inverse CDF, stable across numpy versions."""
    u = gen.random(n)
    return -np.log1p(-u)
