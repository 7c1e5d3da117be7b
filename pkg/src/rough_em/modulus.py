"""Moduli of continuity and numerical class-membership checks.

A modulus is a map ``phi: [0, inf) -> [0, inf)`` with ``phi(0) = 0``.  The
classes used throughout the package:

``INCREASING``        phi non-decreasing
``DINI``              int_0^1 phi(s)/s ds < inf
``D_SQUARE_CONCAVE``  phi**2 concave
``D_EPS_CONCAVE``     phi**(2(1+eps)) concave
``SLOWLY_VARYING``    phi(l t)/phi(t) -> 1 as t -> 0 for every l > 0

Membership cannot be proved numerically; :func:`check_class` runs a sampled
test for each class and reports the worst violation it found.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize


class DomainError(ValueError):
    """Argument outside the domain of a modulus."""


class ModulusClass(enum.Enum):
    INCREASING = "increasing"
    DINI = "dini"
    D_SQUARE_CONCAVE = "d-square-concave"
    D_EPS_CONCAVE = "d-eps-concave"
    SLOWLY_VARYING = "slowly-varying"


@dataclass(frozen=True)
class Modulus:
    """Base class.  Subclasses implement :meth:`_eval` on strictly positive arrays."""

    claims: frozenset = field(default=frozenset(), kw_only=True, compare=False)
    # exponent parameter of the D_EPS_CONCAVE claim
    eps: float | None = field(default=None, kw_only=True, compare=False)

    def __call__(self, r):
        arr = np.asarray(r, dtype=np.float64)
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise DomainError("modulus evaluated at a negative argument")
        out = np.zeros_like(arr)
        pos = arr > 0
        if np.any(pos):
            out[pos] = self._eval(arr[pos])
        if np.ndim(r) == 0:
            return float(out)
        return out

    def _eval(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class Power(Modulus):
    beta: float = 1.0

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError("Power modulus needs beta in (0, 1]")

    def _eval(self, r):
        return r ** self.beta

    def describe(self):
        return f"power:{self.beta!r}"


@dataclass(frozen=True)
class LogPower(Modulus):
    """``(log(c + 1/r))**(-p)``, Dini for p > 1 but not Hoelder of any order."""

    c: float = math.e ** 5
    p: float = 2.0

    def __post_init__(self):
        if self.c < math.e or self.p <= 0:
            raise ValueError("LogPower modulus needs c >= e and p > 0")

    def _eval(self, r):
        # log(c + 1/r) = -log(r) + log1p(c r), stable for tiny r
        return (np.log1p(self.c * r) - np.log(r)) ** (-self.p)

    def describe(self):
        return f"logpower:{self.c!r}:{self.p!r}"


@dataclass(frozen=True)
class Linear(Modulus):
    slope: float = 1.0

    def __post_init__(self):
        if self.slope < 0:
            raise ValueError("Linear modulus needs a non-negative slope")

    def _eval(self, r):
        return self.slope * r

    def describe(self):
        return f"linear:{self.slope!r}"


@dataclass(frozen=True)
class Product(Modulus):
    """``r**alpha * inner(r)``: the Hoelder-Dini modulus of order alpha."""

    alpha: float = 0.0
    inner: Modulus = field(default_factory=Linear)

    def _eval(self, r):
        return r ** self.alpha * self.inner._eval(r)

    def describe(self):
        return f"product:{self.alpha!r}:({self.inner.describe()})"


@dataclass(frozen=True)
class Sum(Modulus):
    first: Modulus = field(default_factory=Linear)
    second: Modulus = field(default_factory=Linear)

    def _eval(self, r):
        return self.first._eval(r) + self.second._eval(r)

    def describe(self):
        return f"sum:({self.first.describe()}):({self.second.describe()})"


@dataclass(frozen=True)
class Tabulated(Modulus):
    """Piecewise-linear interpolation of sample points; the table must start at 0."""

    xs: tuple = (0.0, 1.0)
    ys: tuple = (0.0, 1.0)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.shape != ys.shape or xs.size < 2:
            raise ValueError("Tabulated modulus needs matching tables of length >= 2")
        if xs[0] != 0 or ys[0] != 0 or np.any(np.diff(xs) <= 0) or np.any(ys < 0):
            raise ValueError("Tabulated modulus needs sorted xs from 0 and ys >= 0 with ys[0] = 0")

    def _eval(self, r):
        if np.any(r > self.xs[-1]):
            raise DomainError(f"argument beyond tabulated range [0, {self.xs[-1]}]")
        return np.interp(r, self.xs, self.ys)

    def describe(self):
        return f"tabulated:{len(self.xs)}"


@dataclass(frozen=True)
class Lifted(Modulus):
    """Two-piece lift: ``t**alpha inner(t)`` on (0, 1], ``2 c_alpha t`` beyond 1."""

    alpha: float = 0.0
    inner: Modulus = field(default_factory=Linear)
    c_alpha: float = 1.0

    def _eval(self, r):
        out = np.empty_like(r)
        low = r <= 1
        out[low] = r[low] ** self.alpha * self.inner._eval(r[low])
        out[~low] = 2.0 * self.c_alpha * r[~low]
        return out

    def describe(self):
        return f"lifted:{self.alpha!r}:({self.inner.describe()})"


@dataclass(frozen=True)
class Tilde(Modulus):
    """``sqrt(inner(s)**2 + s)``."""

    inner: Modulus = field(default_factory=Linear)

    def _eval(self, r):
        return np.sqrt(self.inner._eval(r) ** 2 + r)

    def describe(self):
        return f"tilde:({self.inner.describe()})"


def evaluate(m: Modulus, r):
    return m(r)


def parse_modulus(text: str) -> Modulus:
    """Parse the short forms ``power:0.5``, ``logpower:c:p``, ``linear:1``."""
    parts = text.strip().split(":")
    kind, args = parts[0].lower(), [float(a) for a in parts[1:]]
    try:
        if kind == "power":
            return Power(*args)
        if kind == "logpower":
            return LogPower(*args)
        if kind == "linear":
            return Linear(*args)
    except TypeError as exc:
        raise ValueError(f"bad modulus parameters in {text!r}") from exc
    raise ValueError(f"unknown modulus kind {kind!r}")


def dini_integral(m: Modulus, lower_cut: float, quadrature_points: int = 4001) -> float:
    """Composite Simpson rule for ``int_{lower_cut}^1 phi(s)/s ds`` in ``u = log s``."""
    if not 0 < lower_cut < 1:
        raise ValueError("lower_cut must lie in (0, 1)")
    if quadrature_points < 3:
        raise ValueError("need at least 3 quadrature points")
    u = np.linspace(math.log(lower_cut), 0.0, quadrature_points | 1)
    return float(integrate.simpson(m(np.exp(u)), x=u))


@dataclass
class ClassReport:
    flag: ModulusClass
    passed: bool
    worst_violation: float
    location: float
    modulus: str = ""

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.flag.value}\t{status}\tworst_violation={self.worst_violation:.6e}"
                f"\tat={self.location:.6e}\tmodulus={self.modulus}")


def _sample_points(n: int) -> np.ndarray:
    # log-spaced near 0 plus uniform on (0, 1]
    k = max(n // 2, 2)
    pts = np.concatenate([np.logspace(-12, 0, k), np.linspace(0, 1, n - k + 1)[1:]])
    return np.unique(pts)


def _midpoint_violation(g: Callable, n: int):
    # adjacent grid pairs, random pairs biased towards 0, and pairs (0, s)
    rng = np.random.default_rng(12345)
    pts = _sample_points(n)
    grid = np.concatenate([[0.0], pts])
    a = np.concatenate([grid[:-1], rng.random(n) ** 3, np.zeros_like(pts)])
    b = np.concatenate([grid[1:], rng.random(n), pts])
    mid = 0.5 * (a + b)
    v = 0.5 * (g(a) + g(b)) - g(mid)
    i = int(np.argmax(v))
    return max(float(v[i]), 0.0), float(mid[i])


def _slowly_varying_violation(m: Modulus):
    # |log(phi(l t)/phi(t))| must decay to 0 as t -> 0: along t_k = 10^-k it
    # may not grow once t < 1e-20, and the last sample must be at most half
    # the largest one
    t = 10.0 ** -np.arange(2, 300, dtype=float)
    tail = t < 1e-20
    worst, where = 0.0, 1.0
    for lam in (0.1, 0.5, 2.0, 10.0):
        d = np.abs(np.log(m(lam * t)) - np.log(m(t)))
        growth = np.diff(d[tail])
        i = int(np.argmax(growth))
        if growth[i] > worst:
            worst, where = float(growth[i]), float(t[tail][i + 1])
        excess = d[-1] - 0.5 * np.max(d)
        if excess > worst:
            worst, where = float(excess), float(t[-1])
    return worst, where


def _dini_violation(m: Modulus):
    # Cauchy test in u = log(1/s): increments I(2U) - I(U) of the partial
    # integrals over doubling U must shrink by the factor 3/4 from U=88 to U=352
    def increment(u0):
        val, _ = integrate.quad(lambda u: m(math.exp(-u)), u0, 2 * u0, limit=200)
        return val

    d1, d3 = increment(88.0), increment(352.0)
    return max(d3 - 0.75 * d1, 0.0), math.exp(-704.0)


def check_class(m: Modulus, flag: ModulusClass, n_samples: int = 1000, tol: float = 1e-10,
                eps: float | None = None) -> ClassReport:
    """Sampled test of one class property on (0, 1]."""
    if n_samples < 3:
        raise ValueError("n_samples must be at least 3")
    if not isinstance(flag, ModulusClass):
        raise ValueError(f"unknown class flag {flag!r}")
    if flag is ModulusClass.INCREASING:
        s = np.concatenate([[0.0], _sample_points(n_samples)])
        v = -np.diff(m(s))
        i = int(np.argmax(v))
        worst, where = max(float(v[i]), 0.0), float(s[i + 1])
    elif flag is ModulusClass.D_SQUARE_CONCAVE:
        worst, where = _midpoint_violation(lambda x: m(x) ** 2, n_samples)
    elif flag is ModulusClass.D_EPS_CONCAVE:
        e = eps if eps is not None else m.eps
        if e is None or not 0 < e < 1:
            raise ValueError("D_EPS_CONCAVE needs eps in (0, 1)")
        worst, where = _midpoint_violation(lambda x: m(x) ** (2 * (1 + e)), n_samples)
    elif flag is ModulusClass.SLOWLY_VARYING:
        worst, where = _slowly_varying_violation(m)
    else:
        worst, where = _dini_violation(m)
    return ClassReport(flag, worst <= tol, worst, where, m.describe())


def check_claims(m: Modulus, n_samples: int = 1000, tol: float = 1e-10) -> list[ClassReport]:
    order = list(ModulusClass)
    return [check_class(m, f, n_samples, tol) for f in sorted(m.claims, key=order.index)]


def _max_scaled(m: Modulus, alpha: float):
    grid = np.logspace(-12, 0, 10_000)
    vals = grid ** alpha * m(grid)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    best = float(vals[i])
    if hi > lo:
        res = optimize.minimize_scalar(lambda s: -(s ** alpha) * m(s), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-14})
        best = max(best, float(-res.fun))
    return best


def holder_dini_lift(m: Modulus, alpha: float) -> Lifted:
    """``t**alpha phi(t)`` on (0, 1] and ``2 c_alpha t`` on t > 1, c_alpha = sup_(0,1] s**alpha phi(s)."""
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    return Lifted(alpha=alpha, inner=m, c_alpha=_max_scaled(m, alpha))


def phi_tilde(m: Modulus) -> Tilde:
    return Tilde(inner=m)


def estimate_seminorm(f: Callable, psi: Modulus, box, n_pairs: int, seed: int = 0) -> float:
    """Sampled lower bound of ``sup_{|x-y|<=1} |f(x)-f(y)| / psi(|x-y|)`` over a box.

    ``box`` is a pair of arrays ``(low, high)``.  Pairs are drawn row by row
    from one generator, so a larger ``n_pairs`` only adds pairs.
    """
    low, high = (np.atleast_1d(np.asarray(b, dtype=float)) for b in box)
    if low.shape != high.shape or np.any(high <= low):
        raise ValueError("box must satisfy low < high in every coordinate")
    if n_pairs < 1:
        raise ValueError("n_pairs must be positive")
    d = low.size
    u = np.random.default_rng(seed).random((n_pairs, 2 * d))
    x = low + (high - low) * u[:, :d]
    y = np.clip(x + (2 * u[:, d:] - 1) / math.sqrt(d), low, high)
    dist = np.linalg.norm(x - y, axis=1)
    fx = np.asarray([np.atleast_1d(f(xi)) for xi in x], dtype=float)
    fy = np.asarray([np.atleast_1d(f(yi)) for yi in y], dtype=float)
    keep = dist > 0
    if not np.any(keep):
        return 0.0
    num = np.linalg.norm(fx - fy, axis=1)[keep]
    return float(np.max(num / psi(dist[keep])))
