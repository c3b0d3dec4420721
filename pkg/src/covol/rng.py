"""Seed derivation for reproducible, order-independent Monte Carlo.

Every replicate owns an independent Philox stream (a counter-based
generator) keyed by a hash of ``(seed, replicate)``.  Replicates can thus be
evaluated in any order or in any process and still merge to the same result.
"""

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def derive_seed(seed: int, *keys: int) -> int:
    """Hash ``seed`` and integer ``keys`` into a new 64-bit seed."""
    words = [check_seed(seed)] + [int(k) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(check_seed(seed))))


def replicate_generator(seed: int, replicate: int) -> np.random.Generator:
    return generator(derive_seed(seed, replicate))
