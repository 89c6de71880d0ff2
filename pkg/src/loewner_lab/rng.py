"""Seeded random substreams.

Every random draw in the package comes from a generator derived as
``SeedSequence([master, *keys])``, so a sample's randomness depends only on
its coordinates (cell index, sample index), never on scheduling.
"""

from __future__ import annotations

import numpy as np


def substream(master: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master), *map(int, keys)]))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
