"""Continuous-time Euler-Maruyama schemes evaluated on the finest dyadic grid.

Between scheme gridpoints the state follows

    Y_t = Y_{t_d} + b(t_d, Y_{t_d}) (t - t_d) + sigma(t_d, Y_{t_d}) (W_t - W_{t_d})

with ``t_d`` the scheme-grid floor of ``t``.  Degenerate models use the same
update with the stacked drift (b1; b2) and block diffusion (0; sigma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import brownian
from ._backend import kernels
from ._parallel import chunk_size, resolve_threads, run_chunks
from ._stats import ols
from .brownian import BrownianPathGrid

CSV_HEADER = "# rough-em-lab v1"


class DivergenceError(ArithmeticError):
    """A state became non-finite; carries the path index and the first bad time."""

    def __init__(self, path_index: int, time: float, count: int = 1):
        self.path_index = path_index
        self.time = time
        self.count = count
        msg = f"non-finite state on path {path_index} at t={time!r}"
        if count > 1:
            msg += f" ({count} divergent paths in total)"
        super().__init__(msg)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    scheme_level: int
    model_name: str

    def to_csv(self, target) -> None:
        cols = ",".join(["time"] + [f"x{i}" for i in range(self.states.shape[1])])
        data = np.column_stack([self.times, self.states])
        np.savetxt(target, data, delimiter=",", fmt="%.17g", header=f"{CSV_HEADER}\n{cols}",
                   comments="")


class EmGrid(NamedTuple):
    """Scheme-grid data for a batch: states (P, Nc+1, n), frozen drift (P, Nc, n),
    frozen diffusion (P, Nc, n, m) and the first divergence time per path (nan if none)."""

    states: np.ndarray
    drift: np.ndarray
    diff: np.ndarray
    diverged_at: np.ndarray


def em_grid(model, w: np.ndarray, x0, T: float, level: int, finest_level: int) -> EmGrid:
    """Recursive EM update at step ``T / 2**level`` driven by the fine cumulative path ``w``."""
    p = w.shape[0]
    r = 1 << (finest_level - level)
    nc = 1 << level
    delta = T / nc
    n, m = model.state_dim, model.noise_dim
    dw = w[:, r::r, :] - w[:, :-1:r, :]
    const = model.constant_diffusion
    y = np.empty((p, nc + 1, n))
    y[:, 0, :] = np.asarray(x0, dtype=float)
    drift = np.empty((p, nc, n))
    diff = None if const is not None else np.empty((p, nc, n, m))
    with np.errstate(all="ignore"):
        for c in range(nc):
            t = c * delta
            yc = y[:, c, :]
            b = model.drift(t, yc)
            drift[:, c, :] = b
            nxt = yc + b * delta
            if const is None:
                s = model.diffusion(t, yc)
                diff[:, c] = s
                for j in range(m):
                    nxt += s[..., j] * dw[:, c, j, None]
            else:
                for j in range(m):
                    nxt += const[:, j] * dw[:, c, j, None]
            y[:, c + 1, :] = nxt
    if const is not None:
        diff = np.broadcast_to(const, (p, nc, n, m))
    bad = ~np.isfinite(y).all(axis=2)
    bad[:, 1:] |= ~np.isfinite(drift).all(axis=2)
    first = np.where(bad.any(axis=1), bad.argmax(axis=1) * delta, np.nan)
    return EmGrid(y, drift, diff, first)


def em_fine(g: EmGrid, w: np.ndarray, T: float, level: int, finest_level: int) -> np.ndarray:
    """Continuous-time interpolation of a scheme grid onto the fine grid, (P, N+1, n)."""
    r = 1 << (finest_level - level)
    h = T / (1 << finest_level)
    return kernels.em_fill(g.states[:, :-1, :], g.drift, g.diff, w, r, h)


def _integrate(model, path: BrownianPathGrid, scheme_level: int, x0) -> Trajectory:
    if not 0 <= scheme_level <= path.finest_level:
        raise ValueError(f"scheme level {scheme_level} outside [0, {path.finest_level}]")
    if model.noise_dim != path.dims:
        raise ValueError(f"model needs {model.noise_dim} Brownian coordinates, path has {path.dims}")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (model.state_dim,):
        raise ValueError(f"x0 must have shape ({model.state_dim},)")
    w = path.cumulative()[None]
    g = em_grid(model, w, x0, path.T, scheme_level, path.finest_level)
    if not np.isnan(g.diverged_at[0]):
        raise DivergenceError(path.path_index, float(g.diverged_at[0]))
    states = em_fine(g, w, path.T, scheme_level, path.finest_level)[0]
    states[0] = x0
    return Trajectory(path.times(), states, scheme_level, model.name)


def integrate(model, path: BrownianPathGrid, scheme_level: int, x0) -> Trajectory:
    """Continuous-time EM for a non-degenerate model on one Brownian path."""
    if model.degenerate:
        raise TypeError("use integrate_degenerate for degenerate models")
    return _integrate(model, path, scheme_level, x0)


def integrate_degenerate(model, path: BrownianPathGrid, scheme_level: int, x0) -> Trajectory:
    """Continuous-time EM for (x1, x2); only the second block sees the noise."""
    if not model.degenerate:
        raise TypeError("integrate_degenerate needs a DegenerateSdeModel")
    return _integrate(model, path, scheme_level, x0)


# -- one-step moments ----------------------------------------------------------

@dataclass
class MomentReport:
    model: str
    levels: list
    deltas: list
    sup_means: list
    stderrs: list
    slope: float
    intercept: float
    r2: float
    beta: float
    tol: float
    n_paths: int

    @property
    def passed(self) -> bool:
        return self.slope >= 1.0 - self.tol

    def to_text(self) -> str:
        lines = [f"model\t{self.model}", "level\tdelta\tsup_mean_sq_step\tstderr"]
        for row in zip(self.levels, self.deltas, self.sup_means, self.stderrs):
            lines.append("%d\t%.17g\t%.17g\t%.17g" % row)
        lines.append(f"slope\t{self.slope:.6f}\nr2\t{self.r2:.6f}\nbeta\t{self.beta:.6g}")
        lines.append(f"status\t{'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def one_step_moment_check(model, levels=(4, 5, 6, 7, 8), M: int = 10_000, seed: int = 0,
                          x0=None, tol: float = 0.1, refine: int = 3,
                          threads: int | None = None) -> MomentReport:
    """Estimate sup_t E|Y_t - Y_{t_d}|^2 for each scheme level and fit its slope in delta.

    The sup runs over every point of a grid ``refine`` levels finer than the
    finest scheme level; all scheme levels share the same sampled times.
    """
    if not model.degenerate and not model.meta.bounded:
        raise ValueError("one-step moment check needs a bounded-regime model")
    levels = sorted(int(j) for j in levels)
    if len(levels) < 2 or M < 2:
        raise ValueError("need at least two levels and two paths")
    finest = levels[-1] + refine
    T = model.T
    x0 = np.zeros(model.state_dim) if x0 is None else np.asarray(x0, dtype=float)
    n_fine = 1 << finest
    chunk = chunk_size(n_fine + 1, model.state_dim)

    def work(a, b):
        incr = brownian.sample_increments(seed, range(a, b), T, finest, model.noise_dim)
        w = brownian.cumulative(incr)
        out = []
        for j in levels:
            g = em_grid(model, w, x0, T, j, finest)
            if not np.isnan(g.diverged_at).all():
                bad = int(np.argmax(~np.isnan(g.diverged_at)))
                raise DivergenceError(a + bad, float(g.diverged_at[bad]))
            fine = em_fine(g, w, T, j, finest)
            r = 1 << (finest - j)
            c = np.minimum(np.arange(n_fine + 1) // r, (1 << j) - 1)
            d = fine - g.states[:, c, :]
            sq = np.sum(d * d, axis=2)
            out.append((sq.sum(axis=0), (sq * sq).sum(axis=0)))
        return out

    parts = run_chunks(work, M, chunk, resolve_threads(threads))
    means, errs = [], []
    for i, _ in enumerate(levels):
        s1 = sum(part[i][0] for part in parts)
        s2 = sum(part[i][1] for part in parts)
        mean = s1 / M
        var = np.maximum(s2 / M - mean * mean, 0.0) * M / (M - 1)
        k = int(np.argmax(mean))
        means.append(float(mean[k]))
        errs.append(float(math.sqrt(var[k] / M)))
    deltas = [T / (1 << j) for j in levels]
    if min(means) <= 0:
        slope, intercept, r2 = float("inf"), float("nan"), float("nan")
    else:
        slope, intercept, r2 = ols(np.log(deltas), np.log(means))
    beta = max(mv / dv for mv, dv in zip(means, deltas))
    return MomentReport(model.name, levels, deltas, means, errs, slope, intercept, r2, beta,
                        tol, M)


__all__ = ["DivergenceError", "EmGrid", "MomentReport", "Trajectory", "em_fine", "em_grid",
           "integrate", "integrate_degenerate", "one_step_moment_check"]
