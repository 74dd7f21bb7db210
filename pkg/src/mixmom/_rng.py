"""Seeded random streams.

Every stream is a Philox (counter-based) generator keyed by the user seed, a
purpose label and optional integer keys, so that e.g. simulation and
contamination draws are reproducible independently of each other and of
evaluation order.
"""

import zlib

import numpy as np


def _key(purpose):
    return zlib.crc32(purpose.encode("utf-8"))


def seed_sequence(seed, purpose, *keys):
    return np.random.SeedSequence(
        entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
        spawn_key=(_key(purpose),) + tuple(int(k) for k in keys),
    )


def generator(seed, purpose, *keys):
    return np.random.Generator(np.random.Philox(seed_sequence(seed, purpose, *keys)))


def derive_seed(seed, purpose, *keys):
    """A 63-bit integer seed for a sub-task."""
    return int(seed_sequence(seed, purpose, *keys).generate_state(2, np.uint32).view(np.uint64)[0] >> 1)
