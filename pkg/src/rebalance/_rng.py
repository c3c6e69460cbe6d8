from __future__ import annotations

import numpy as np


def derive_seed(*parts: int) -> int:
    """Stable 63-bit seed from a tuple of non-negative ints."""
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
