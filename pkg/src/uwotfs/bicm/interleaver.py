"""Seeded pseudo-random bit interleaver."""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def permutation(length: int, seed: int) -> np.ndarray:
    """Permutation fully determined by ``(length, seed)``; ``out = x[perm]``."""
    if length <= 0:
        raise ValueError(f"interleaver length must be positive, got {length}")
    perm = np.random.default_rng([seed, length]).permutation(length)
    perm.setflags(write=False)
    return perm


def interleave(bits, seed: int = 0) -> np.ndarray:
    bits = np.asarray(bits)
    return bits[..., permutation(bits.shape[-1], seed)]


def deinterleave(values, seed: int = 0) -> np.ndarray:
    values = np.asarray(values)
    perm = permutation(values.shape[-1], seed)
    out = np.empty_like(values)
    out[..., perm] = values
    return out
