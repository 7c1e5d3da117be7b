"""Coupled strong-error studies, log-log rate fits and theoretical bound curves."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng, brownian
from ._backend import kernels
from ._parallel import chunk_size, resolve_threads, run_chunks
from ._stats import mean_and_stderr, ols
from .integrator import CSV_HEADER, DivergenceError, Trajectory, em_grid
from .modulus import Modulus

# mean-square errors below this are floating-point noise, not discretisation error
ROUNDOFF_FLOOR = 1e-24
EPS_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
CSV_COLUMNS = ("level", "delta", "mean_sq_sup_error", "stderr", "n_paths", "bound_value", "residual")


class RateFitError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


def sup_distance(a: Trajectory, b: Trajectory) -> float:
    """max over the shared fine grid of |a_t - b_t|."""
    if a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
        raise GridMismatchError("trajectories live on different grids")
    if a.states.shape != b.states.shape:
        raise GridMismatchError("trajectories have different state dimensions")
    d = a.states - b.states
    return float(np.sqrt(np.max(np.sum(d * d, axis=1))))


@dataclass
class RateStudy:
    model: object
    levels: tuple
    reference_level: int
    M: int
    seed: int = 0
    x0: tuple | None = None
    reference: str = "em"     # "em" or "exact" (models that carry an exact solution)

    def __post_init__(self):
        self.levels = tuple(sorted(int(j) for j in self.levels))
        if not self.levels:
            raise ValueError("need at least one scheme level")
        if len(set(self.levels)) != len(self.levels) or self.levels[0] < 0:
            raise ValueError("scheme levels must be distinct and non-negative")
        if self.levels[-1] >= self.reference_level:
            raise ValueError("reference level must exceed every scheme level")
        if self.M < 2:
            raise ValueError("need at least two paths")
        if self.reference not in ("em", "exact"):
            raise ValueError("reference must be 'em' or 'exact'")
        if self.reference == "exact" and getattr(self.model, "exact_fn", None) is None:
            raise ValueError(f"model {self.model.name!r} has no exact solution")
        x0 = np.zeros(self.model.state_dim) if self.x0 is None else np.asarray(self.x0, dtype=float)
        if x0.shape != (self.model.state_dim,):
            raise ValueError(f"x0 must have {self.model.state_dim} components")
        self.x0 = tuple(float(v) for v in x0)

    @property
    def T(self) -> float:
        return self.model.T

    @property
    def model_name(self) -> str:
        return self.model.name


@dataclass
class EnvelopeResult:
    passed: bool
    constant: float
    trend_slope: float
    tol: float

    def to_text(self) -> str:
        return (f"envelope\t{'PASS' if self.passed else 'FAIL'}\tA*={self.constant:.6g}"
                f"\ttrend_slope={self.trend_slope:.6g}\ttol={self.tol:g}")


@dataclass
class RateReport:
    model: str
    levels: list
    deltas: list
    errors: list
    stderrs: list
    n_paths: int
    reference_level: int
    reference_kind: str
    reference_error: float
    reference_stderr: float
    seed: int
    bound_values: list | None = None
    bound_label: str = ""
    envelope: EnvelopeResult | None = None
    fit: tuple | None = field(default=None)

    def __post_init__(self):
        if self.fit is None and all(e > 0 for e in self.errors) and len(self.levels) >= 2:
            self.fit = fit_rate(list(zip(self.deltas, self.errors)))

    @property
    def slope(self) -> float:
        return self.fit[0] if self.fit else math.nan

    @property
    def r2(self) -> float:
        return self.fit[2] if self.fit else math.nan

    @property
    def reference_limited(self) -> bool:
        return self.reference_error > max(self.errors[0] / 4.0, ROUNDOFF_FLOOR)

    @property
    def monotone(self) -> bool:
        """Errors non-increasing in level up to two combined standard errors."""
        for i in range(len(self.errors) - 1):
            slack = 2.0 * math.hypot(self.stderrs[i], self.stderrs[i + 1])
            if self.errors[i + 1] > self.errors[i] + slack:
                return False
        return True

    def attach_bound(self, values, label: str = "", tol: float = 0.05) -> EnvelopeResult:
        self.bound_values = [float(v) for v in values]
        self.bound_label = label
        self.envelope = envelope_check(self, self.bound_values, tol=tol)
        return self.envelope

    def residuals(self) -> list:
        if self.bound_values is None:
            return [math.nan] * len(self.levels)
        return [e / b if b > 0 else math.nan for e, b in zip(self.errors, self.bound_values)]

    def csv_text(self) -> str:
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        out.write(",".join(CSV_COLUMNS) + "\n")
        bounds = self.bound_values or [math.nan] * len(self.levels)
        for row in zip(self.levels, self.deltas, self.errors, self.stderrs, bounds, self.residuals()):
            lv, d, e, s, b, r = row
            out.write(f"{lv},{d:.17g},{e:.17g},{s:.17g},{self.n_paths},{b:.17g},{r:.17g}\n")
        return out.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.csv_text())

    def summary_text(self) -> str:
        lines = [f"model\t{self.model}", f"paths\t{self.n_paths}", f"seed\t{self.seed}",
                 f"reference\t{self.reference_kind} level {self.reference_level}"]
        if self.fit:
            lines.append(f"slope\t{self.fit[0]:.6f}\nintercept\t{self.fit[1]:.6f}\nr2\t{self.fit[2]:.6f}")
        else:
            lines.append("slope\tn/a (non-positive errors)")
        if self.reference_kind == "em":
            lines.append(f"reference_self_error\t{self.reference_error:.6g} +- {self.reference_stderr:.2g}")
        if self.envelope is not None:
            lines.append(f"bound\t{self.bound_label}")
            lines.append(self.envelope.to_text())
        flags = []
        if self.reference_limited:
            flags.append("reference-limited")
        if not self.monotone:
            flags.append("non-monotone")
        lines.append(f"flags\t{','.join(flags) if flags else 'none'}")
        return "\n".join(lines)


def strong_error(study: RateStudy, threads: int | None = None) -> RateReport:
    """Mean squared sup error of EM at each scheme level against a reference on shared paths.

    Every path is generated once at the reference level; all scheme levels and
    the reference consume that same increment array.  Results do not depend on
    the thread count: chunk boundaries are fixed by the problem size and per-path
    values are aggregated in path-index order.
    """
    model = study.model
    T, L = study.T, study.reference_level
    h = T / (1 << L)
    x0 = np.asarray(study.x0)
    m = model.noise_dim
    chunk = chunk_size((1 << L) + 1, max(model.state_dim, m))
    exact = study.reference == "exact"

    def work(a, b):
        idx = range(a, b)
        w = brownian.cumulative(brownian.sample_increments(study.seed, idx, T, L, m))
        bad = np.full(b - a, np.nan)
        if exact:
            area = brownian.gaussian_draws(study.seed, idx, (1 << L) * model.n, _rng.STREAM_AREA)
            ref = model.exact_fn(w, h, x0, area.reshape(b - a, 1 << L, model.n))
            self_err = np.zeros(b - a)
        else:
            g = em_grid(model, w, x0, T, L, L)
            bad = np.fmin(bad, g.diverged_at)
            ref = g.states
            g1 = em_grid(model, w, x0, T, L - 1, L)
            bad = np.fmin(bad, g1.diverged_at)
            self_err = kernels.em_sup_sq(g1.states[:, :-1], g1.drift, g1.diff, w, ref, 2, h)
        per_level = []
        for j in study.levels:
            g = em_grid(model, w, x0, T, j, L)
            bad = np.fmin(bad, g.diverged_at)
            per_level.append(kernels.em_sup_sq(g.states[:, :-1], g.drift, g.diff, w, ref,
                                               1 << (L - j), h))
        return per_level, self_err, bad

    parts = run_chunks(work, study.M, chunk, resolve_threads(threads))
    bad = np.concatenate([p[2] for p in parts])
    if not np.isnan(bad).all():
        first = int(np.argmax(~np.isnan(bad)))
        raise DivergenceError(first, float(bad[first]), int(np.sum(~np.isnan(bad))))
    errors, stderrs = [], []
    for i, _ in enumerate(study.levels):
        mu, se = mean_and_stderr(np.concatenate([p[0][i] for p in parts]))
        errors.append(mu)
        stderrs.append(se)
    ref_mu, ref_se = mean_and_stderr(np.concatenate([p[1] for p in parts]))
    deltas = [T / (1 << j) for j in study.levels]
    return RateReport(model.name, list(study.levels), deltas, errors, stderrs, study.M, L,
                      study.reference, ref_mu, ref_se, study.seed)


def fit_rate(data) -> tuple:
    """OLS of log e on log delta; ``data`` is a RateReport or (delta, e) pairs."""
    if isinstance(data, RateReport):
        pairs = list(zip(data.deltas, data.errors))
    else:
        pairs = [(float(d), float(e)) for d, e in data]
    if any(e <= 0 for _, e in pairs):
        raise RateFitError("non-positive error: a log-log fit is undefined; use envelope mode instead")
    if any(d <= 0 for d, _ in pairs):
        raise RateFitError("step sizes must be positive")
    d, e = zip(*pairs)
    return ols(np.log(d), np.log(e))


@dataclass
class BoundCurve:
    deltas: list
    values: list
    envelope_constant: float | None


def bound_curve_thm11(phi: Modulus, C: float, deltas, errors=None) -> BoundCurve:
    """phi(C sqrt(delta))**2, and the smallest A with A * bound >= errors when given."""
    if C < 1:
        raise ValueError("C must be at least 1")
    deltas = [float(d) for d in deltas]
    values = [float(phi(C * math.sqrt(d))) ** 2 for d in deltas]
    const = None
    if errors is not None:
        const = _envelope_constant(errors, values)
    return BoundCurve(deltas, values, const)


def _envelope_constant(errors, bounds) -> float:
    worst = 0.0
    for e, b in zip(errors, bounds):
        if e <= 0:
            continue
        worst = max(worst, e / b if b > 0 else math.inf)
    return worst


def bound_curve_thm13(alpha: float, delta: float, eps_grid=EPS_GRID) -> float:
    """min over the eps grid of (log log delta^{-alpha eps})^{-1/4} + delta^{alpha (1 - eps)}.

    Grid points whose iterated logarithm is not positive are skipped.
    """
    if not 0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    best = math.inf
    for eps in eps_grid:
        if not 0 < eps < 1:
            raise ValueError("eps grid must lie in (0, 1)")
        inner = alpha * eps * math.log(1.0 / delta)
        if inner <= 1.0:
            continue
        value = math.log(inner) ** -0.25 + delta ** (alpha * (1 - eps))
        best = min(best, value)
    if best == math.inf:
        raise ValueError(f"delta={delta} too large: log log(delta^(-alpha eps)) <= 0 on the whole eps grid")
    return best


def bound_curve_thm13_values(alpha: float, deltas, eps_grid=EPS_GRID) -> list:
    return [bound_curve_thm13(alpha, d, eps_grid) for d in deltas]


def envelope_check(report, bounds, tol: float = 0.05, deltas=None) -> EnvelopeResult:
    """Pass iff log(e/bound) has no downward trend in log delta beyond ``tol``.

    ``report`` is a RateReport or a plain error list (then ``deltas`` is required).
    """
    if isinstance(report, RateReport):
        errors, deltas = report.errors, report.deltas
    else:
        errors = list(report)
        if deltas is None:
            raise ValueError("deltas required with a plain error list")
    if len(errors) != len(bounds) or len(errors) != len(deltas):
        raise ValueError("errors, bounds and deltas must have equal length")
    const = _envelope_constant(errors, bounds)
    keep = [(d, e / b) for d, e, b in zip(deltas, errors, bounds) if e > 0 and b > 0]
    if len(keep) < 2:
        return EnvelopeResult(True, const, 0.0, tol)
    d, r = zip(*keep)
    slope, _, _ = ols(np.log(d), np.log(r))
    return EnvelopeResult(bool(slope >= -tol), const, slope, tol)
