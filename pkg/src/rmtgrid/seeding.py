"""Seed fan-out.

Every random stream is derived from one integer seed through
``numpy.random.SeedSequence([seed, tag_key(tag), *index])`` where ``tag_key``
is the CRC-32 of the purpose tag.  Streams therefore depend only on
``(seed, tag, index)``, never on call order or on the number of workers.
"""
import zlib

import numpy as np

# purpose tags in use
JITTER = "jitter"
HAAR = "haar"
LOAD = "load"
CALIBRATE = "calibrate"
SYNTH = "synth"
CORRUPT = "corrupt"


def tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def seed_sequence(seed: int, tag: str, *index: int) -> np.random.SeedSequence:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.SeedSequence([int(seed), tag_key(tag), *[int(i) for i in index]])


def rng(seed: int, tag: str, *index: int) -> np.random.Generator:
    """Independent generator for ``(seed, tag, index...)``."""
    return np.random.default_rng(seed_sequence(seed, tag, *index))


def derive_seed(seed: int, tag: str, *index: int) -> int:
    """A plain 63-bit integer seed for APIs that take ints."""
    return int(seed_sequence(seed, tag, *index).generate_state(2, np.uint64)[0] >> np.uint64(1))
