"""Pure numpy implementation of the hot kernels.

Each function reproduces the floating-point operation order of the compiled
version in ``_kernels.pyx`` so the two backends agree bit for bit.
"""

import numpy as np
from scipy.special import ndtri

from ._rng import GOLDEN

_U64 = np.uint64
_TWO_M53 = 1.0 / 9007199254740992.0


def _mix(z):
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


def standard_normals(keys, start, count):
    """N(0, 1) draws for slots ``start .. start+count-1`` of each key; shape (P, count)."""
    keys = np.asarray(keys, dtype=np.uint64)
    slots = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = keys[:, None] + slots[None, :] * _U64(GOLDEN)
        v = _mix(z)
    u = ((v >> _U64(11)).astype(np.float64) + 0.5) * _TWO_M53
    return ndtri(u)


def coarsen_sum(incr, factor):
    """Sum consecutive groups of ``factor`` rows left to right; incr has shape (P, N, d)."""
    incr = np.asarray(incr, dtype=np.float64)
    p, n, d = incr.shape
    blocks = incr.reshape(p, n // factor, factor, d)
    out = blocks[:, :, 0, :].copy()
    for q in range(1, factor):
        out += blocks[:, :, q, :]
    return out


def _fill(y_grid, drift, diff, w, r, h):
    n_coarse = y_grid.shape[1]
    n_fine = w.shape[1] - 1
    k = np.arange(n_fine + 1)
    c = np.minimum(k // r, n_coarse - 1)
    dt = (k - c * r) * h
    y = y_grid[:, c, :] + drift[:, c, :] * dt[None, :, None]
    dw = w - w[:, c * r, :]
    for j in range(w.shape[2]):
        y += diff[..., j][:, c, :] * dw[:, :, j, None]
    return y


def em_fill(y_grid, drift, diff, w, r, h):
    """Continuous-time EM states on the fine grid from frozen left-endpoint data.

    ``y_grid``/``drift`` are (P, Nc, n), ``diff`` is (P, Nc, n, m), ``w`` holds the
    cumulative Brownian path (P, N+1, m) with ``N = Nc * r`` and fine step ``h``.
    """
    return _fill(y_grid, drift, diff, w, r, h)


def em_sup_sq(y_grid, drift, diff, w, ref, r, h):
    """max_k |Y_k - ref_k|^2 per path, without keeping Y around."""
    d = _fill(y_grid, drift, diff, w, r, h) - ref
    acc = d[:, :, 0] * d[:, :, 0]
    for i in range(1, d.shape[2]):
        acc = acc + d[:, :, i] * d[:, :, i]
    return acc.max(axis=1)
