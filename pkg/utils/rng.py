"""Seeded random streams.

All randomness goes through numpy's PCG64 bit generator seeded with a 64-bit
integer, so equal seeds yield equal streams on every platform.
"""
import numpy as np

from utils.errors import InvalidArgumentError

SEED_MAX = 2**64 - 1


def make_rng(seed: int) -> np.random.Generator:
    if not 0 <= seed <= SEED_MAX:
        raise InvalidArgumentError(f"seed must be in [0, 2^64), got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(seed: int, stream: int) -> int:
    """Independent 64-bit seed for sub-stream `stream` of a run seed."""
    state = np.random.SeedSequence([seed, stream]).generate_state(1, dtype=np.uint64)
    return int(state[0])
