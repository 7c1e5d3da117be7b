"""SDE coefficient bundles and the catalog of example models.

All coefficient functions are vectorised over leading batch axes: a drift maps
``(t, x[..., n]) -> [..., n]`` and a diffusion maps ``(t, x[..., n]) ->
[..., n, m]``.

Catalog
-------
=====================  ==========================================================
``zero``               b = 0, sigma = I
``constant-drift``     b = c, sigma = I
``ou``                 b = -x, sigma = s I (additive noise)
``ou-multiplicative``  b = -x, sigma = diag(1 + a sin x_i)
``holder``             b = min(1, |x - a|)**beta u, sigma = I; modulus exactly r**beta
``holder-time``        ``holder`` plus sqrt(t) u; time modulus r**(1/2)
``log-dini``           b = phi(min(1, |x - a|)) u with phi = LogPower(c, p), sigma = I
``unbounded-holder``   b = -x + min(1, |x - a|)**beta u, sigma = I (linear growth)
``perturbed-sigma``    b = 0, sigma = diag(1 + a sin x_i)
``kinetic``            degenerate: b1 = x2, b2 = 0, sigma = I; exact solution known
``kinetic-rough``      degenerate: b1 = x2, b2 = Hoelder-Dini(2/3) in x1 + phi**(7/2) in x2
=====================  ==========================================================

``u`` is the unit vector ``(1, ..., 1)/sqrt(n)`` and ``a`` a reference point
(``center``, default 0) where the drift is roughest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .modulus import (Linear, LogPower, Modulus, ModulusClass, Power, Product, Sum,
                      holder_dini_lift)


class CatalogError(ValueError):
    """Unknown catalog name or parameters outside the documented range."""


class TimeDomainError(ValueError):
    """Coefficient requested at a time outside [0, T]."""


@dataclass(frozen=True)
class ModelMetadata:
    """Declared sup-norms and moduli (non-degenerate case).

    ``drift_sup`` is None for unbounded drifts; ``growth_constant`` is the
    linear-growth constant K_T of the unbounded regime.
    """

    drift_sup: float | None
    diffusion_sup: float
    grad_diffusion_sup: float
    hess_diffusion_sup: float
    inv_diffusion_sup: float
    grad_inv_diffusion_sup: float
    spatial_modulus: Modulus
    time_modulus: Modulus = field(default_factory=lambda: Linear(0.0))
    growth_constant: float | None = None

    @property
    def bounded(self) -> bool:
        return self.drift_sup is not None


@dataclass(frozen=True)
class DegenerateMetadata:
    x1_modulus: Modulus          # |x1 - y1|**(2/3) phi(|x1 - y1|)
    dini_modulus: Modulus        # phi
    lifted_modulus: Modulus      # phi_[2/3]
    time_modulus: Modulus
    ellipticity_floor: float
    drift2_sup: float
    diffusion_sup: float
    inv_diffusion_sup: float


@dataclass(frozen=True, eq=False)
class SdeModel:
    name: str
    n: int
    drift_fn: Callable
    diffusion_fn: Callable
    T: float
    meta: ModelMetadata
    diffusion_inverse_fn: Callable | None = None
    grad_diffusion_fn: Callable | None = None
    constant_diffusion: np.ndarray | None = None
    params: dict = field(default_factory=dict)
    reference_points: tuple = ()
    window: float = 4.0

    degenerate = False

    @property
    def state_dim(self) -> int:
        return self.n

    @property
    def noise_dim(self) -> int:
        return self.n

    def drift(self, t, x):
        return self.drift_fn(t, x)

    def diffusion(self, t, x):
        if self.constant_diffusion is not None:
            return np.broadcast_to(self.constant_diffusion, np.shape(x)[:-1] + (self.n, self.n))
        return self.diffusion_fn(t, x)

    def diffusion_inverse(self, t, x):
        if self.diffusion_inverse_fn is None:
            return np.linalg.inv(self.diffusion(t, x))
        return self.diffusion_inverse_fn(t, x)


@dataclass(frozen=True, eq=False)
class DegenerateSdeModel:
    """State (x1, x2) in R^{2n}; noise drives only the second block."""

    name: str
    n: int
    drift1_fn: Callable
    drift2_fn: Callable
    grad2_drift1_fn: Callable
    sigma_fn: Callable
    T: float
    meta: DegenerateMetadata
    constant_sigma: np.ndarray | None = None
    exact_fn: Callable | None = None
    params: dict = field(default_factory=dict)
    reference_points: tuple = ()
    window: float = 4.0

    degenerate = True

    @property
    def state_dim(self) -> int:
        return 2 * self.n

    @property
    def noise_dim(self) -> int:
        return self.n

    @property
    def constant_diffusion(self):
        if self.constant_sigma is None:
            return None
        return np.vstack([np.zeros((self.n, self.n)), self.constant_sigma])

    def split(self, x):
        return x[..., : self.n], x[..., self.n:]

    def drift(self, t, x):
        x1, x2 = self.split(x)
        return np.concatenate([self.drift1_fn(t, x1, x2), self.drift2_fn(t, x1, x2)], axis=-1)

    def sigma(self, t, x):
        x1, x2 = self.split(x)
        if self.constant_sigma is not None:
            return np.broadcast_to(self.constant_sigma, np.shape(x)[:-1] + (self.n, self.n))
        return self.sigma_fn(t, x1, x2)

    def diffusion(self, t, x):
        if self.constant_sigma is not None:
            return np.broadcast_to(self.constant_diffusion, np.shape(x)[:-1] + (2 * self.n, self.n))
        s = self.sigma(t, x)
        return np.concatenate([np.zeros_like(s), s], axis=-2)


def _check_time(model, t):
    if not 0 <= t <= model.T:
        raise TimeDomainError(f"t={t} outside [0, {model.T}]")


def eval_drift(model, t: float, x) -> np.ndarray:
    """Drift at (t, x); the stacked (b1; b2) for degenerate models."""
    _check_time(model, t)
    return model.drift(t, np.asarray(x, dtype=float))


def eval_diffusion(model, t: float, x) -> np.ndarray:
    """Diffusion matrix at (t, x); the 2n x n block (0; sigma) for degenerate models."""
    _check_time(model, t)
    return np.array(model.diffusion(t, np.asarray(x, dtype=float)))


# -- helpers ------------------------------------------------------------------

def _norm(v):
    if v.shape[-1] == 1:
        return np.abs(v[..., 0])
    return np.sqrt(np.sum(v * v, axis=-1))


def _unit(n):
    return np.full(n, 1.0 / math.sqrt(n))


def _center(n, center):
    return np.broadcast_to(np.asarray(center, dtype=float), (n,)).copy()


def _positive_int(params, key, default):
    v = params.get(key, default)
    if int(v) != v or int(v) < 1:
        raise CatalogError(f"{key} must be a positive integer, got {v!r}")
    return int(v)


def _horizon(params):
    T = float(params.get("T", 1.0))
    if T <= 0:
        raise CatalogError("T must be positive")
    return T


def _identity_meta(n, drift_sup, spatial, time_mod=None, growth=None):
    return ModelMetadata(drift_sup=drift_sup, diffusion_sup=1.0, grad_diffusion_sup=0.0,
                         hess_diffusion_sup=0.0, inv_diffusion_sup=1.0,
                         grad_inv_diffusion_sup=0.0, spatial_modulus=spatial,
                         time_modulus=time_mod or Linear(0.0), growth_constant=growth)


def log_dini_modulus(c: float = math.e ** 5, p: float = 2.0) -> LogPower:
    """The catalog Dini modulus with its claimed classes."""
    claims = {ModulusClass.INCREASING, ModulusClass.DINI, ModulusClass.D_SQUARE_CONCAVE,
              ModulusClass.D_EPS_CONCAVE, ModulusClass.SLOWLY_VARYING}
    return LogPower(c, p, claims=frozenset(claims), eps=0.1)


# -- builders -----------------------------------------------------------------

_KNOWN_KEYS = {
    "zero": {"n", "T"},
    "constant-drift": {"n", "T", "c"},
    "ou": {"n", "T", "sigma"},
    "ou-multiplicative": {"n", "T", "a"},
    "holder": {"n", "T", "beta", "center"},
    "holder-time": {"n", "T", "beta", "center"},
    "log-dini": {"n", "T", "c", "p", "center"},
    "unbounded-holder": {"n", "T", "beta", "center"},
    "perturbed-sigma": {"n", "T", "a"},
    "kinetic": {"n", "T"},
    "kinetic-rough": {"n", "T", "c", "p", "center"},
}


def _zero(p):
    n, T = _positive_int(p, "n", 1), _horizon(p)
    return SdeModel("zero", n, lambda t, x: np.zeros_like(x), None, T,
                    _identity_meta(n, 0.0, Linear(0.0, claims=frozenset({ModulusClass.INCREASING}))),
                    diffusion_inverse_fn=lambda t, x: np.broadcast_to(np.eye(n), np.shape(x)[:-1] + (n, n)),
                    constant_diffusion=np.eye(n), params=dict(p))


def _constant(p):
    n, T = _positive_int(p, "n", 1), _horizon(p)
    c = np.broadcast_to(np.asarray(p.get("c", 1.0), dtype=float), (n,)).copy()
    return SdeModel("constant-drift", n, lambda t, x: np.broadcast_to(c, np.shape(x)), None, T,
                    _identity_meta(n, float(np.linalg.norm(c)), Linear(0.0)),
                    diffusion_inverse_fn=lambda t, x: np.broadcast_to(np.eye(n), np.shape(x)[:-1] + (n, n)),
                    constant_diffusion=np.eye(n), params=dict(p))


def _ou(p):
    n, T = _positive_int(p, "n", 1), _horizon(p)
    s = float(p.get("sigma", 1.0))
    if s <= 0:
        raise CatalogError("sigma must be positive")
    meta = ModelMetadata(drift_sup=None, diffusion_sup=s, grad_diffusion_sup=0.0,
                         hess_diffusion_sup=0.0, inv_diffusion_sup=1.0 / s,
                         grad_inv_diffusion_sup=0.0, spatial_modulus=Linear(1.0),
                         growth_constant=1.0 + s * math.sqrt(n) + math.sqrt(n) / s)
    return SdeModel("ou", n, lambda t, x: -x, None, T, meta,
                    diffusion_inverse_fn=lambda t, x: np.broadcast_to(np.eye(n) / s, np.shape(x)[:-1] + (n, n)),
                    constant_diffusion=s * np.eye(n), params=dict(p))


def _sin_sigma(n, a):
    def sigma(t, x):
        return (1.0 + a * np.sin(x))[..., :, None] * np.eye(n)

    def sigma_inv(t, x):
        return (1.0 / (1.0 + a * np.sin(x)))[..., :, None] * np.eye(n)

    def grad(t, x):
        # [..., i, j, k] = d_k sigma_ij
        g = np.zeros(np.shape(x)[:-1] + (n, n, n))
        idx = np.arange(n)
        g[..., idx, idx, idx] = a * np.cos(x)
        return g

    return sigma, sigma_inv, grad


def _check_amplitude(a):
    if not 0 <= a < 0.5:
        raise CatalogError("amplitude a must lie in [0, 0.5)")


def _ou_mult(p):
    n, T = _positive_int(p, "n", 1), _horizon(p)
    a = float(p.get("a", 0.3))
    _check_amplitude(a)
    sigma, sigma_inv, grad = _sin_sigma(n, a)
    meta = ModelMetadata(drift_sup=None, diffusion_sup=1 + a, grad_diffusion_sup=a,
                         hess_diffusion_sup=a, inv_diffusion_sup=1 / (1 - a),
                         grad_inv_diffusion_sup=a / (1 - a) ** 2, spatial_modulus=Linear(1.0),
                         growth_constant=1.0 + math.sqrt(n) * (1 + a + 2 * a + 1 / (1 - a) + a / (1 - a) ** 2))
    return SdeModel("ou-multiplicative", n, lambda t, x: -x, sigma, T, meta,
                    diffusion_inverse_fn=sigma_inv, grad_diffusion_fn=grad, params=dict(p))


def _perturbed(p):
    n, T = _positive_int(p, "n", 1), _horizon(p)
    a = float(p.get("a", 0.1))
    _check_amplitude(a)
    sigma, sigma_inv, grad = _sin_sigma(n, a)
    meta = ModelMetadata(drift_sup=0.0, diffusion_sup=1 + a, grad_diffusion_sup=a,
                         hess_diffusion_sup=a, inv_diffusion_sup=1 / (1 - a),
                         grad_inv_diffusion_sup=a / (1 - a) ** 2, spatial_modulus=Linear(0.0))
    return SdeModel("perturbed-sigma", n, lambda t, x: np.zeros_like(x), sigma, T, meta,
                    diffusion_inverse_fn=sigma_inv, grad_diffusion_fn=grad, params=dict(p))


def _holder_parts(p):
    n = _positive_int(p, "n", 1)
    beta = float(p.get("beta", 0.5))
    if not 0 < beta <= 1:
        raise CatalogError("beta must lie in (0, 1]")
    return n, beta, _center(n, p.get("center", 0.0)), _unit(n)


def _holder(p, time_dependent=False):
    n, beta, a, u = _holder_parts(p)
    T = _horizon(p)

    def drift(t, x):
        return (np.minimum(1.0, _norm(x - a)) ** beta)[..., None] * u

    claims = frozenset({ModulusClass.INCREASING, ModulusClass.DINI, ModulusClass.D_SQUARE_CONCAVE})
    spatial = Power(beta, claims=claims if beta <= 0.5 else frozenset({ModulusClass.INCREASING,
                                                                      ModulusClass.DINI}))
    if not time_dependent:
        return SdeModel("holder", n, drift, None, T, _identity_meta(n, 1.0, spatial),
                        diffusion_inverse_fn=lambda t, x: np.broadcast_to(np.eye(n), np.shape(x)[:-1] + (n, n)),
                        constant_diffusion=np.eye(n), params=dict(p), reference_points=(a,))

    def drift_t(t, x):
        return drift(t, x) + math.sqrt(t) * u

    return SdeModel("holder-time", n, drift_t, None, T,
                    _identity_meta(n, 1.0 + math.sqrt(T), spatial, time_mod=Power(0.5)),
                    diffusion_inverse_fn=lambda t, x: np.broadcast_to(np.eye(n), np.shape(x)[:-1] + (n, n)),
                    constant_diffusion=np.eye(n), params=dict(p), reference_points=(a,))


def _log_dini(p):
    n, T = _positive_int(p, "n", 1), _horizon(p)
    c, pw = float(p.get("c", math.e ** 5)), float(p.get("p", 2.0))
    if pw <= 1 or c < math.exp(1 + 2 * pw) * (1 - 1e-12):
        raise CatalogError("log-dini needs p > 1 and c >= exp(1 + 2p)")
    phi = log_dini_modulus(c, pw)
    a, u = _center(n, p.get("center", 0.0)), _unit(n)

    def drift(t, x):
        return phi(np.minimum(1.0, _norm(x - a)))[..., None] * u

    return SdeModel("log-dini", n, drift, None, T, _identity_meta(n, phi(1.0), phi),
                    diffusion_inverse_fn=lambda t, x: np.broadcast_to(np.eye(n), np.shape(x)[:-1] + (n, n)),
                    constant_diffusion=np.eye(n), params=dict(p), reference_points=(a,))


def _unbounded_holder(p):
    n, beta, a, u = _holder_parts(p)
    T = _horizon(p)

    def drift(t, x):
        return -x + (np.minimum(1.0, _norm(x - a)) ** beta)[..., None] * u

    # |b(x)| <= |x| + 1 and |sigma|_HS + |sigma^-1|_HS = 2 sqrt(n)
    meta = _identity_meta(n, None, Sum(Linear(1.0), Power(beta)), growth=1.0 + 2 * math.sqrt(n))
    return SdeModel("unbounded-holder", n, drift, None, T, meta,
                    diffusion_inverse_fn=lambda t, x: np.broadcast_to(np.eye(n), np.shape(x)[:-1] + (n, n)),
                    constant_diffusion=np.eye(n), params=dict(p), reference_points=(a,))


def _kinetic_exact(w, h, x0, area_normals):
    """Exact (X1, X2) on the fine grid given W and independent N(0,1) area draws.

    X2 = x2 + W and X1 = x1 + int_0^t X2; on each step the integral of the
    Brownian bridge part is Gaussian with variance h**3/12, independent of W.
    """
    n = w.shape[-1]
    x0 = np.asarray(x0, dtype=float)
    x2 = x0[n:] + w
    step = 0.5 * h * (x2[:, :-1, :] + x2[:, 1:, :]) + math.sqrt(h ** 3 / 12.0) * area_normals
    x1 = np.empty_like(x2)
    x1[:, 0, :] = x0[:n]
    np.cumsum(step, axis=1, out=x1[:, 1:, :])
    x1[:, 1:, :] += x0[:n]
    return np.concatenate([x1, x2], axis=-1)


def _kinetic(p):
    n, T = _positive_int(p, "n", 1), _horizon(p)
    eye = np.eye(n)
    meta = DegenerateMetadata(x1_modulus=Linear(0.0), dini_modulus=Linear(0.0),
                              lifted_modulus=Linear(0.0), time_modulus=Linear(0.0),
                              ellipticity_floor=1.0, drift2_sup=0.0, diffusion_sup=1.0,
                              inv_diffusion_sup=1.0)
    return DegenerateSdeModel(
        "kinetic", n,
        drift1_fn=lambda t, x1, x2: x2.copy(),
        drift2_fn=lambda t, x1, x2: np.zeros_like(x2),
        grad2_drift1_fn=lambda t, x1, x2: np.broadcast_to(eye, np.shape(x1)[:-1] + (n, n)),
        sigma_fn=None, T=T, meta=meta, constant_sigma=eye, exact_fn=_kinetic_exact,
        params=dict(p))


def _kinetic_rough(p):
    n, T = _positive_int(p, "n", 1), _horizon(p)
    c, pw = float(p.get("c", math.e ** 5)), float(p.get("p", 2.0))
    if pw <= 1 or c < math.exp(1 + 2 * pw) * (1 - 1e-12):
        raise CatalogError("kinetic-rough needs p > 1 and c >= exp(1 + 2p)")
    phi = log_dini_modulus(c, pw)
    phi72 = LogPower(c, 3.5 * pw)
    x1_mod = Product(2.0 / 3.0, phi)
    a, u = _center(n, p.get("center", 0.0)), _unit(n)
    eye = np.eye(n)

    def drift2(t, x1, x2):
        r1 = np.minimum(1.0, _norm(x1 - a))
        r2 = np.minimum(1.0, _norm(x2 - a))
        return (x1_mod(r1) + phi72(r2))[..., None] * u

    meta = DegenerateMetadata(x1_modulus=x1_mod, dini_modulus=phi,
                              lifted_modulus=holder_dini_lift(phi, 2.0 / 3.0),
                              time_modulus=Linear(0.0), ellipticity_floor=1.0,
                              drift2_sup=float(x1_mod(1.0) + phi72(1.0)),
                              diffusion_sup=1.0, inv_diffusion_sup=1.0)
    return DegenerateSdeModel(
        "kinetic-rough", n,
        drift1_fn=lambda t, x1, x2: x2.copy(),
        drift2_fn=drift2,
        grad2_drift1_fn=lambda t, x1, x2: np.broadcast_to(eye, np.shape(x1)[:-1] + (n, n)),
        sigma_fn=None, T=T, meta=meta, constant_sigma=eye, params=dict(p),
        reference_points=(np.concatenate([a, a]),))


_BUILDERS = {
    "zero": _zero,
    "constant-drift": _constant,
    "ou": _ou,
    "ou-multiplicative": _ou_mult,
    "holder": _holder,
    "holder-time": lambda p: _holder(p, time_dependent=True),
    "log-dini": _log_dini,
    "unbounded-holder": _unbounded_holder,
    "perturbed-sigma": _perturbed,
    "kinetic": _kinetic,
    "kinetic-rough": _kinetic_rough,
}

CATALOG_NAMES = tuple(_BUILDERS)


def make_catalog_model(name: str, params: dict | None = None, *, validate: bool = True, **kwargs):
    """Build a catalog model; ``params`` and keyword arguments are merged."""
    if name not in _BUILDERS:
        raise CatalogError(f"unknown catalog model {name!r}; known: {', '.join(CATALOG_NAMES)}")
    merged = dict(params or {})
    merged.update(kwargs)
    unknown = set(merged) - _KNOWN_KEYS[name]
    if unknown:
        raise CatalogError(f"unknown parameter(s) for {name!r}: {', '.join(sorted(unknown))}")
    try:
        model = _BUILDERS[name](merged)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CatalogError):
            raise
        raise CatalogError(f"bad parameters for {name!r}: {exc}") from exc
    if validate:
        report = validate_model(model, n_samples=256, seed=0)
        if not report.passed:
            raise CatalogError(f"catalog model {name!r} failed its own invariants:\n{report.to_text()}")
    return model


# -- validation ---------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    worst_ratio: float
    worst_excess: float
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    model: str
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_text(self) -> str:
        lines = [f"model\t{self.model}\t{'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            lines.append(f"{c.name}\t{'PASS' if c.passed else 'FAIL'}\tworst_ratio={c.worst_ratio:.6e}"
                         f"\tworst_excess={c.worst_excess:.6e}\t{c.detail}")
        return "\n".join(lines)


def _compare(name, lhs, rhs, tol, detail=""):
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    excess = lhs - rhs
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > tol, np.inf, 0.0))
    worst_excess = float(np.max(excess)) if excess.size else 0.0
    return CheckResult(name, float(np.max(ratio)) if ratio.size else 0.0, max(worst_excess, 0.0),
                       bool(worst_excess <= tol), detail)


def _pairs(rng, dim, k, window, anchors):
    """Point pairs: uniform in the window with |x - y| <= 1, some far apart, some at anchors."""
    x = rng.uniform(-window, window, (k, dim))
    v = rng.uniform(-1, 1, (k, dim)) / math.sqrt(dim)
    far = rng.random(k) < 0.1
    v[far] *= 4.0
    y = x + v
    for i, a in enumerate(anchors):
        sl = slice(i * k // 8, (i + 1) * k // 8)
        y[sl] = a
        x[sl] = a + rng.uniform(-1, 1, x[sl].shape) * rng.random((x[sl].shape[0], 1)) ** 4
    return x, y


def _hs(m):
    return np.sqrt(np.sum(m * m, axis=(-2, -1)))


def _sigma_checks(model, sigma, inv, tol):
    out = []
    eye = np.eye(sigma.shape[-1])
    out.append(_compare("diffusion-inverse", np.max(np.abs(sigma @ inv - eye), axis=(-2, -1)),
                        np.zeros(len(sigma)), 1e-8))
    cond = np.linalg.cond(sigma)
    out.append(_compare("diffusion-condition", cond, np.full(len(sigma), 1e12), 0.0))
    return out


def validate_model(model, n_samples: int = 10_000, seed: int = 0, tol: float = 1e-8) -> ValidationReport:
    """Sample (t, x, y) and check every declared modulus and norm inequality.

    Failures are reported, never raised.
    """
    rng = np.random.default_rng(seed)
    k = n_samples
    t = rng.uniform(0, model.T, k)
    s = rng.uniform(0, model.T, k)
    if model.degenerate:
        return _validate_degenerate(model, rng, t, s, k, tol)
    meta = model.meta
    n = model.n
    anchors = list(model.reference_points)
    x, y = _pairs(rng, n, k, model.window, anchors)
    checks = []

    bx = _drift_rows(model, t, x)
    by = _drift_rows(model, t, y)
    d = _norm(x - y)
    checks.append(_compare("spatial-modulus", _norm(bx - by), meta.spatial_modulus(d), tol,
                           meta.spatial_modulus.describe()))

    sig_t = _diff_rows(model, t, x)
    sig_s = _diff_rows(model, s, x)
    lhs = _norm(bx - _drift_rows(model, s, x)) + _hs(sig_t - sig_s)
    checks.append(_compare("time-modulus", lhs, meta.time_modulus(np.abs(t - s)), tol,
                           meta.time_modulus.describe()))

    inv = np.array([model.diffusion_inverse(ti, xi[None])[0] for ti, xi in zip(t[:512], x[:512])])
    checks.extend(_sigma_checks(model, sig_t[:512], inv, tol))

    if meta.bounded:
        grid_sup = _grid_drift_sup(model)
        checks.append(_compare("drift-sup", abs(grid_sup - meta.drift_sup),
                               0.0, 1e-6 * max(1.0, meta.drift_sup),
                               f"grid={grid_sup:.12g} declared={meta.drift_sup:.12g}"))
    else:
        lhs = _norm(bx) + _hs(sig_t) + _hs(np.linalg.inv(sig_t))
        checks.append(_compare("linear-growth", lhs, meta.growth_constant * (1 + _norm(x)), tol,
                               f"K_T={meta.growth_constant:.6g}"))
    return ValidationReport(model.name, checks)


def is_autonomous(model) -> bool:
    """True when the declared time modulus is identically zero."""
    tm = model.meta.time_modulus
    return isinstance(tm, Linear) and tm.slope == 0.0


def _drift_rows(model, t, x):
    # evaluate row by row in time when the model is time dependent
    if is_autonomous(model):
        return model.drift(0.0, x)
    return np.stack([model.drift(ti, xi[None])[0] for ti, xi in zip(t, x)])


def _diff_rows(model, t, x):
    if model.constant_diffusion is not None:
        return np.array(model.diffusion(0.0, x))
    if is_autonomous(model):
        return np.array(model.diffusion(0.0, x))
    return np.stack([model.diffusion(ti, xi[None])[0] for ti, xi in zip(t, x)])


def _grid_drift_sup(model) -> float:
    n = model.n
    w = model.window
    pts = 100_001 if n == 1 else int(round(100_000 ** (1.0 / n))) + 1
    axis = np.linspace(-w, w, pts)
    grid = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    if is_autonomous(model):
        times = [0.0]
    else:
        times = np.linspace(0, model.T, 17)
    return float(max(np.max(_norm(model.drift(ti, grid))) for ti in times))


def _validate_degenerate(model, rng, t, s, k, tol):
    meta = model.meta
    n = model.n
    checks = []
    anchors = list(model.reference_points)
    x, y = _pairs(rng, 2 * n, k, model.window, anchors)
    x1, x2 = model.split(x)
    y1, y2 = model.split(y)
    tt = 0.0 if is_autonomous(model) else t[:, None]

    g = np.asarray(model.grad2_drift1_fn(tt, x1, x2))
    sv = np.linalg.svd(g, compute_uv=False)[..., -1]
    checks.append(_compare("ellipticity", meta.ellipticity_floor - sv, 0.0, tol,
                           f"floor={meta.ellipticity_floor}"))

    # first block, same x2
    lhs = _norm(model.drift1_fn(tt, x1, x2) - model.drift1_fn(tt, y1, x2))
    checks.append(_compare("C2-x1", lhs, meta.x1_modulus(_norm(x1 - y1)), tol,
                           meta.x1_modulus.describe()))
    lhs = _hs(np.asarray(model.grad2_drift1_fn(tt, x1, x2)) - np.asarray(model.grad2_drift1_fn(tt, x1, y2)))
    checks.append(_compare("C2-grad", lhs, meta.dini_modulus(_norm(x2 - y2)), tol,
                           meta.dini_modulus.describe()))
    lhs = _norm(model.drift2_fn(tt, x1, x2) - model.drift2_fn(tt, y1, y2))
    rhs = meta.x1_modulus(_norm(x1 - y1)) + meta.dini_modulus(_norm(x2 - y2)) ** 3.5
    checks.append(_compare("C3", lhs, rhs, tol))

    ss = 0.0 if is_autonomous(model) else s[:, None]
    lhs = (_norm(model.drift1_fn(tt, x1, x2) - model.drift1_fn(ss, x1, x2))
           + _norm(model.drift2_fn(tt, x1, x2) - model.drift2_fn(ss, x1, x2))
           + _hs(np.asarray(model.sigma(tt, x)) - np.asarray(model.sigma(ss, x))))
    checks.append(_compare("C4-time", lhs, meta.time_modulus(np.abs(t - s)), tol,
                           meta.time_modulus.describe()))

    sig = np.array(model.sigma(0.0, x[:512]))
    checks.extend(_sigma_checks(model, sig, np.linalg.inv(sig), tol))
    return ValidationReport(model.name, checks)
