"""Counter-based key derivation shared by both kernel backends.

Every Gaussian draw is a pure function of ``(seed, path_index, stream, slot)``:
the key is a SplitMix64 hash of the first three, and slot ``s`` yields
``mix(key + (s + 1) * GOLDEN)``.  No generator state is carried between calls,
so any slot can be regenerated in isolation and the draw for a path never
depends on how paths are batched or scheduled.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_SALT = 0xD1B54A32D192ED03

# reserved stream ids
STREAM_INCREMENTS = 0
STREAM_AREA = 1
STREAM_INNER = 2


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def path_key(seed: int, path_index: int, stream: int = 0) -> int:
    if seed < 0 or path_index < 0 or stream < 0:
        raise ValueError("seed, path_index and stream must be non-negative")
    k = mix64(seed + GOLDEN)
    k = mix64(k ^ ((path_index + 1) * GOLDEN))
    return mix64(k + (stream + 1) * _STREAM_SALT)


def path_keys(seed: int, path_indices, stream: int = 0) -> np.ndarray:
    return np.array([path_key(seed, int(p), stream) for p in path_indices], dtype=np.uint64)
