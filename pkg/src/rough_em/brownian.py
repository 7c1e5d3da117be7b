"""Dyadically refinable Brownian paths driven by a counter-based generator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from ._backend import kernels

MAX_LEVEL = 62


def _check_level(level: int) -> None:
    if level < 0:
        raise ValueError("level must be non-negative")
    if level > MAX_LEVEL:
        raise OverflowError(f"2**{level} increments overflow the index type")


def gaussian_draws(seed: int, path_indices, count: int, stream: int = 0, start: int = 0) -> np.ndarray:
    """Standard normal draws, shape (len(path_indices), count)."""
    keys = _rng.path_keys(seed, path_indices, stream)
    return kernels.standard_normals(keys, start, count)


def sample_increments(seed: int, path_indices, T: float, level: int, dims: int,
                      stream: int = _rng.STREAM_INCREMENTS) -> np.ndarray:
    """Brownian increments for a batch of paths, shape (P, 2**level, dims)."""
    _check_level(level)
    if T <= 0 or dims < 1:
        raise ValueError("need T > 0 and dims >= 1")
    n = 1 << level
    z = gaussian_draws(seed, path_indices, n * dims, stream)
    return z.reshape(len(z), n, dims) * math.sqrt(T / n)


def cumulative(increments: np.ndarray) -> np.ndarray:
    """W on the grid from increments (P, N, d): shape (P, N+1, d) with W_0 = 0."""
    p, n, d = increments.shape
    w = np.zeros((p, n + 1, d))
    np.cumsum(increments, axis=1, out=w[:, 1:, :])
    return w


@dataclass(frozen=True, eq=False)
class BrownianPathGrid:
    T: float
    finest_level: int
    dims: int
    seed: int
    path_index: int
    increments: np.ndarray

    @property
    def n_steps(self) -> int:
        return 1 << self.finest_level

    @property
    def step(self) -> float:
        return self.T / self.n_steps

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.step

    def cumulative(self) -> np.ndarray:
        return cumulative(self.increments[None])[0]

    def value_at(self, k: int) -> np.ndarray:
        if not 0 <= k <= self.n_steps:
            raise IndexError(f"grid index {k} outside [0, {self.n_steps}]")
        return self.cumulative()[k]

    def coarsen(self, level: int) -> np.ndarray:
        return coarsen(self, level)


def sample_path(seed: int, path_index: int, T: float, L: int, dims: int) -> BrownianPathGrid:
    incr = sample_increments(seed, [path_index], T, L, dims)[0]
    incr.flags.writeable = False
    return BrownianPathGrid(T, L, dims, seed, path_index, incr)


def coarsen(path: BrownianPathGrid, level: int) -> np.ndarray:
    """Increments at step ``T / 2**level``; each is the left-to-right sum of its children."""
    if not 0 <= level <= path.finest_level:
        raise ValueError(f"level {level} outside [0, {path.finest_level}]")
    factor = 1 << (path.finest_level - level)
    if factor == 1:
        return path.increments.copy()
    return kernels.coarsen_sum(path.increments[None], factor)[0]
