"""
Seeded random streams

All randomness flows from one seed through named substreams, so that adding a
new consumer never shifts the draws seen by existing ones.
"""

import zlib

import numpy as np


def substream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Independent generator for (seed, name, index)"""
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), key, int(index)]))


def trial_stream(base_seed: int, trial_index: int, name: str = "trial") -> np.random.Generator:
    """Per-trial stream seeded with base_seed + trial_index"""
    return substream(base_seed + trial_index, name)
