"""Regularised Kolmogorov equation, Bismut-type estimators and their explicit constants.

Everything here concerns the driftless diffusion dZ = sigma_t(Z) dW started at
(s, x), its semigroup P0_{s,t} f(x) = E f(Z_t), the first and second variational
flows, and the resolvent-type equation

    u_s = int_s^T exp(-lambda (t - s)) P0_{s,t} (b_t + grad u_t . b_t) dt,

solved by Picard iteration on a 1-D grid when sigma is constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate, signal
from scipy.special import ndtr

from . import _rng, brownian
from ._stats import mean_and_stderr
from .integrator import CSV_HEADER
from .modulus import Linear, Modulus

_FD_STEP = 1e-5


class MissingMetadataError(ValueError):
    pass


class NonContractionError(RuntimeError):
    pass


class OutsideWindowError(ValueError):
    pass


# -- constants -------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantsReport:
    T: float
    drift_sup: float
    diffusion_sup: float
    grad_sigma: float
    hess_sigma: float
    inv_sigma: float
    grad_inv_sigma: float
    lam: float            # Lambda
    lam_tilde: float      # Lambda-tilde
    upsilon: float
    lambda_min: float
    modulus: Modulus = field(default_factory=lambda: Linear(0.0))

    def phi_tilde(self, s):
        s = np.asarray(s, dtype=float)
        return np.sqrt(self.modulus(s) ** 2 + s)

    def hessian_bound(self, lam: float) -> float:
        """Upsilon * int_0^T exp(-lam t) t^-1 phi_tilde(|sigma| sqrt t) dt."""
        if lam <= 0:
            raise ValueError("lambda must be positive")
        c = self.diffusion_sup

        # t = v**4 removes the t^-1/2-type singularity at 0
        def integrand(v):
            if v == 0.0:
                return 4.0 * math.sqrt(c) if self.modulus(0.0) == 0 else math.inf
            return 4.0 * math.exp(-lam * v ** 4) * float(self.phi_tilde(c * v * v)) / v

        val, _ = integrate.quad(integrand, 0.0, self.T ** 0.25, limit=400, epsabs=1e-13, epsrel=1e-11)
        return self.upsilon * val

    def to_text(self) -> str:
        rows = [("T", self.T), ("drift_sup", self.drift_sup), ("diffusion_sup", self.diffusion_sup),
                ("grad_sigma_sup", self.grad_sigma), ("hess_sigma_sup", self.hess_sigma),
                ("inv_sigma_sup", self.inv_sigma), ("grad_inv_sigma_sup", self.grad_inv_sigma),
                ("Lambda", self.lam), ("Lambda_tilde", self.lam_tilde), ("Upsilon", self.upsilon),
                ("lambda_min", self.lambda_min)]
        lines = [f"{k}\t{v:.17g}" for k, v in rows]
        lines.append(f"modulus\t{self.modulus.describe()}")
        return "\n".join(lines)


def constants(model_or_meta, T: float | None = None) -> ConstantsReport:
    """Closed-form constants from declared sup-norms (bounded regime only)."""
    meta = getattr(model_or_meta, "meta", model_or_meta)
    if T is None:
        T = getattr(model_or_meta, "T", None)
    if T is None or T <= 0:
        raise MissingMetadataError("horizon T is required")
    needed = ("drift_sup", "diffusion_sup", "grad_diffusion_sup", "hess_diffusion_sup",
              "inv_diffusion_sup", "grad_inv_diffusion_sup")
    for name in needed:
        if getattr(meta, name, None) is None:
            raise MissingMetadataError(f"metadata field {name!r} is missing")
    b = meta.drift_sup
    g, g2 = meta.grad_diffusion_sup, meta.hess_diffusion_sup
    si, gi = meta.inv_diffusion_sup, meta.grad_inv_diffusion_sup
    lam = math.exp(T * g * g / 2) * si
    lam_tilde = 48 * math.exp(288 * T * T * g ** 4) * (
        6 * math.sqrt(2) * math.exp(T * g * g) * si ** 4
        + T * gi * gi
        + 2 * T * T * g2 * g2 * si * si * math.exp(2 * T * g * g))
    root = math.sqrt(lam_tilde)
    upsilon = root * (3 + 2 * b + 28 * (lam + root) * b * b)
    lambda_min = 9 * math.pi * lam * lam * b * b + 4 * (b + lam) ** 2
    return ConstantsReport(T, b, meta.diffusion_sup, g, g2, si, gi, lam, lam_tilde, upsilon,
                           lambda_min, getattr(meta, "spatial_modulus", Linear(0.0)))


# -- coefficient helpers -----------------------------------------------------------

def _as_batch(x, n, p):
    x = np.asarray(x, dtype=float)
    if x.shape == (n,):
        return np.broadcast_to(x, (p, n)).copy()
    if x.shape == (p, n):
        return x.copy()
    raise ValueError(f"x must have shape ({n},)")


def _sigma(model, t, z):
    return np.array(model.diffusion(t, z))


def _sigma_inv(model, t, z):
    return np.array(model.diffusion_inverse(t, z))


def _dsigma(model, t, z, v):
    """Directional derivative (grad_v sigma)(z), shape (P, n, n)."""
    if model.constant_diffusion is not None:
        return np.zeros(z.shape + (z.shape[-1],))
    if model.grad_diffusion_fn is not None:
        return np.einsum("pijk,pk->pij", model.grad_diffusion_fn(t, z), v)
    e = _FD_STEP
    return (_sigma(model, t, z + e * v) - _sigma(model, t, z - e * v)) / (2 * e)


def _d2sigma(model, t, z, a, c):
    if model.constant_diffusion is not None:
        return np.zeros(z.shape + (z.shape[-1],))
    e = _FD_STEP * 10
    return (_dsigma(model, t, z + e * a, c) - _dsigma(model, t, z - e * a, c)) / (2 * e)


def _dsigma_inv(model, t, z, v):
    # grad_v sigma^-1 = -sigma^-1 (grad_v sigma) sigma^-1
    if model.constant_diffusion is not None:
        return np.zeros(z.shape + (z.shape[-1],))
    si = _sigma_inv(model, t, z)
    return -si @ _dsigma(model, t, z, v) @ si


def _mv(a, v):
    return np.einsum("pij,pj->pi", a, v)


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def _apply_f(f, z):
    v = np.asarray(f(z), dtype=float)
    return v


# -- semigroup ---------------------------------------------------------------------

@dataclass(frozen=True)
class SemigroupValue:
    value: np.ndarray | float
    stderr: np.ndarray | float
    method: str


def gauss_hermite(order: int):
    """Nodes and weights for E g(xi), xi ~ N(0, 1)."""
    nodes, weights = hermegauss(order)
    return nodes, weights / math.sqrt(2 * math.pi)


def semigroup_apply(model, s: float, t: float, f, x, method: str = "quadrature",
                    order: int = 64, M: int = 10_000, seed: int = 0, steps: int = 256) -> SemigroupValue:
    """P0_{s,t} f(x): Gauss-Hermite for constant sigma, Monte Carlo over EM paths otherwise."""
    if not 0 <= s < t <= model.T:
        raise ValueError("need 0 <= s < t <= T")
    n = model.n
    x = np.asarray(x, dtype=float)
    if method == "quadrature":
        if model.constant_diffusion is None:
            raise ValueError("quadrature needs a constant diffusion; use method='mc'")
        nodes, weights = gauss_hermite(order)
        grids = np.meshgrid(*([nodes] * n), indexing="ij")
        xi = np.stack([g.ravel() for g in grids], axis=-1)
        wmesh = np.meshgrid(*([weights] * n), indexing="ij")
        wt = np.prod(np.stack([g.ravel() for g in wmesh], axis=-1), axis=-1)
        sig = model.constant_diffusion
        z = x + math.sqrt(t - s) * xi @ sig.T
        vals = _apply_f(f, z)
        val = np.tensordot(wt, vals, axes=(0, 0))
        return SemigroupValue(val if np.ndim(val) else float(val), 0.0, "quadrature")
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    z, _ = _driftless_paths(model, s, t, x, M, seed, steps)
    vals = _apply_f(f, z)
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(M)
    return SemigroupValue(mean if np.ndim(mean) else float(mean),
                          se if np.ndim(se) else float(se), "mc")


def _increments(seed, paths, steps, n, dt, stream=_rng.STREAM_INCREMENTS, start=0):
    z = brownian.gaussian_draws(seed, paths, steps * n, stream, start)
    return z.reshape(len(paths), steps, n) * math.sqrt(dt)


def _driftless_paths(model, s, t, x, M, seed, steps):
    n = model.n
    if model.constant_diffusion is not None:
        steps = 1
    dt = (t - s) / steps
    dw = _increments(seed, range(M), steps, n, dt)
    z = _as_batch(x, n, M)
    for k in range(steps):
        z = z + _mv(_sigma(model, s + k * dt, z), dw[:, k])
    return z, dw


# -- variational flow ---------------------------------------------------------------

@dataclass(frozen=True)
class FlowTrajectory:
    times: np.ndarray
    states: np.ndarray
    flow: np.ndarray


def variational_flow(model, path, s: float, x, eta) -> FlowTrajectory:
    """Joint EM of dZ = sigma(Z) dW and its linearisation along one Brownian path.

    The path's fine grid is used from the first grid time >= s up to its horizon.
    """
    if model.degenerate:
        raise TypeError("variational flow is defined for non-degenerate models")
    if not 0 <= s < path.T:
        raise ValueError("s must lie in [0, T)")
    n = model.n
    h = path.step
    k0 = int(math.ceil(s / h - 1e-12))
    incr = path.increments[k0:]
    z = np.asarray(x, dtype=float)[None].copy()
    j = np.asarray(eta, dtype=float)[None].copy()
    states, flows = [z[0].copy()], [j[0].copy()]
    for k in range(incr.shape[0]):
        tk = (k0 + k) * h
        dw = incr[k][None]
        dz = _mv(_sigma(model, tk, z), dw)
        dj = _mv(_dsigma(model, tk, z, j), dw)
        z = z + dz
        j = j + dj
        if not (np.isfinite(z).all() and np.isfinite(j).all()):
            raise FloatingPointError(f"non-finite flow at t={tk + h!r}")
        states.append(z[0].copy())
        flows.append(j[0].copy())
    times = (k0 + np.arange(incr.shape[0] + 1)) * h
    return FlowTrajectory(times, np.array(states).reshape(-1, n), np.array(flows).reshape(-1, n))


@dataclass
class FlowMoments:
    second: float
    second_stderr: float
    fourth: float
    fourth_stderr: float
    bound_second: float
    bound_fourth: float
    n_paths: int

    def passed(self, z: float = 2.326) -> bool:
        """Both moments below their bounds at one-sided confidence given by ``z``."""
        return (self.second + z * self.second_stderr <= self.bound_second
                and self.fourth + z * self.fourth_stderr <= self.bound_fourth)

    def to_text(self) -> str:
        return (f"E|J|^2\t{self.second:.10g}\t+-{self.second_stderr:.3g}\tbound\t{self.bound_second:.10g}\n"
                f"E|J|^4\t{self.fourth:.10g}\t+-{self.fourth_stderr:.3g}\tbound\t{self.bound_fourth:.10g}")


def _flow_batch(model, s, t, x, eta, paths, seed, steps):
    n = model.n
    dt = (t - s) / steps
    dw = _increments(seed, paths, steps, n, dt)
    p = len(paths)
    z = _as_batch(x, n, p)
    j = _as_batch(eta, n, p)
    for k in range(steps):
        tk = s + k * dt
        dz = _mv(_sigma(model, tk, z), dw[:, k])
        dj = _mv(_dsigma(model, tk, z, j), dw[:, k])
        z = z + dz
        j = j + dj
    return z, j


def flow_moments(model, s: float, t: float, x, eta, M: int = 100_000, seed: int = 0,
                 steps: int = 256) -> FlowMoments:
    """Monte-Carlo E|grad_eta Z_t|^2 and E|grad_eta Z_t|^4 against their Gronwall bounds."""
    if not 0 <= s < t <= model.T:
        raise ValueError("need 0 <= s < t <= T")
    _, j = _flow_batch(model, s, t, x, eta, range(M), seed, steps)
    sq = _dot(j, j)
    m2, e2 = mean_and_stderr(sq)
    m4, e4 = mean_and_stderr(sq * sq)
    g = model.meta.grad_diffusion_sup
    T = model.T
    eta2 = float(np.dot(eta, eta))
    return FlowMoments(m2, e2, m4, e4, eta2 * math.exp(T * g * g),
                       8 * eta2 * eta2 * math.exp(288 * T * T * g ** 4), M)


# -- Bismut estimators ----------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n_paths: int

    def within(self, target: float, k: float) -> bool:
        return abs(self.value - target) <= k * self.stderr + 1e-15


def _bismut_weights(model, s, t, x, eta, paths, seed, steps, stream=_rng.STREAM_INCREMENTS,
                    start=0):
    """Terminal states and int_s^t <sigma^-1(Z) grad_eta Z, dW> / (t - s) per path."""
    n = model.n
    if model.constant_diffusion is not None:
        steps = 1
    dt = (t - s) / steps
    p = len(paths)
    dw = brownian.gaussian_draws(seed, paths, steps * n, stream, start).reshape(p, steps, n) * math.sqrt(dt)
    z = _as_batch(x, n, p)
    j = _as_batch(eta, n, p)
    acc = np.zeros(p)
    for k in range(steps):
        tk = s + k * dt
        d = dw[:, k]
        acc = acc + _dot(_mv(_sigma_inv(model, tk, z), j), d)
        dz = _mv(_sigma(model, tk, z), d)
        dj = _mv(_dsigma(model, tk, z, j), d)
        z = z + dz
        j = j + dj
    return z, acc / (t - s)


def bismut_gradient(model, s: float, t: float, f, x, eta, M: int = 100_000, seed: int = 0,
                    steps: int = 256) -> Estimate:
    """Monte-Carlo grad_eta P0_{s,t} f(x) through the Bismut weight."""
    if not 0 <= s < t <= model.T:
        raise ValueError("need 0 <= s < t <= T")
    if model.diffusion_inverse_fn is None and model.constant_diffusion is None:
        raise MissingMetadataError("sigma^-1 is not available for this model")
    z, wgt = _bismut_weights(model, s, t, x, eta, range(M), seed, steps)
    mu, se = mean_and_stderr(_apply_f(f, z) * wgt)
    return Estimate(mu, se, M)


@dataclass
class GradientBoundCheck:
    estimate: Estimate
    second_moment: float
    second_moment_stderr: float
    bound: float
    passed: bool


def gradient_bound_check(model, s, t, f, x, eta, M: int = 100_000, seed: int = 0,
                         steps: int = 256, z: float = 3.0) -> GradientBoundCheck:
    """|grad_eta P0 f|^2 <= Lambda^2 |eta|^2 P0 f^2 / (t - s), tested beyond ``z`` standard errors."""
    est = bismut_gradient(model, s, t, f, x, eta, M, seed, steps)
    zt, _ = _bismut_weights(model, s, t, x, eta, range(M), seed, steps)
    f2, f2_se = mean_and_stderr(_apply_f(f, zt) ** 2)
    lam = constants(model).lam
    eta2 = float(np.dot(eta, eta))
    bound = lam * lam * eta2 * (f2 + z * f2_se) / (t - s)
    low = max(abs(est.value) - z * est.stderr, 0.0)
    return GradientBoundCheck(est, f2, f2_se, bound, low * low <= bound)


def bismut_hessian(model, s: float, t: float, f, x, eta, eta2, M: int = 10_000, seed: int = 0,
                   steps: int = 128, inner: int | None = None) -> Estimate:
    """Nested Monte-Carlo second derivative grad_eta2 grad_eta P0_{s,t} f(x).

    Outer paths run to the midpoint carrying three stochastic integrals; at the
    midpoint P0 f and its gradient along grad_eta2 Z are estimated with ``inner``
    (default sqrt(M)) inner Bismut paths.
    """
    if not 0 <= s < t <= model.T:
        raise ValueError("need 0 <= s < t <= T")
    n = model.n
    mid = 0.5 * (s + t)
    if model.constant_diffusion is not None:
        steps = 1
    inner = inner or max(2, int(round(math.sqrt(M))))
    dt = (mid - s) / steps
    dw = _increments(seed, range(M), steps, n, dt)
    z = _as_batch(x, n, M)
    j1 = _as_batch(eta, n, M)
    j2 = _as_batch(eta2, n, M)
    gam = np.zeros((M, n))
    i1 = np.zeros(M)
    i2 = np.zeros(M)
    i3 = np.zeros(M)
    for k in range(steps):
        tk = s + k * dt
        d = dw[:, k]
        si = _sigma_inv(model, tk, z)
        i1 = i1 + _dot(_mv(si, j1), d)
        i2 = i2 + _dot(_mv(_dsigma_inv(model, tk, z, j2), j1), d)
        i3 = i3 + _dot(_mv(si, gam), d)
        sig = _sigma(model, tk, z)
        dgam = _mv(_dsigma(model, tk, z, gam) + _d2sigma(model, tk, z, j1, j2), d)
        dj1 = _mv(_dsigma(model, tk, z, j1), d)
        dj2 = _mv(_dsigma(model, tk, z, j2), d)
        z = z + _mv(sig, d)
        j1, j2, gam = j1 + dj1, j2 + dj2, gam + dgam

    # inner estimates at the midpoint, one independent stream per outer path
    inner_steps = 1 if model.constant_diffusion is not None else steps
    pf = np.empty(M)
    grad = np.empty(M)
    for p in range(M):
        zi, wi = _bismut_weights(model, mid, t, z[p], j2[p], range(inner), seed, inner_steps,
                                 stream=_rng.STREAM_INNER, start=p * inner * inner_steps * n)
        fv = _apply_f(f, zi)
        pf[p] = fv.mean()
        grad[p] = np.mean(fv * wi)
    total = (grad * i1 + pf * i2 + pf * i3) / (t - s)
    mu, se = mean_and_stderr(2.0 * total)
    return Estimate(mu, se, M)


# -- Picard solver -----------------------------------------------------------------------

@dataclass(eq=False)
class KolmogorovSolution:
    lam: float
    times: np.ndarray
    xs: np.ndarray
    values: np.ndarray        # (K+1, Nx)
    gradients: np.ndarray     # (K+1, Nx)
    history: list
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.history)

    def contraction_ratios(self) -> list:
        h = self.history
        return [h[i + 1] / h[i] for i in range(len(h) - 1) if h[i] > 0]

    def second_differences(self) -> np.ndarray:
        dx = self.xs[1] - self.xs[0]
        u = self.values
        return (u[:, 2:] - 2 * u[:, 1:-1] + u[:, :-2]) / (dx * dx)

    def to_csv(self, path) -> None:
        tt, xx = np.meshgrid(self.times, self.xs, indexing="ij")
        data = np.column_stack([tt.ravel(), xx.ravel(), self.values.ravel(), self.gradients.ravel()])
        np.savetxt(path, data, delimiter=",", fmt="%.17g", header=f"{CSV_HEADER}\nt,x,u,du",
                   comments="")


def central_gradient(u: np.ndarray, dx: float) -> np.ndarray:
    """Central differences along the last axis with zero gradient at both edges."""
    g = np.zeros_like(u)
    g[..., 1:-1] = (u[..., 2:] - u[..., :-2]) / (2 * dx)
    return g


def _exp_linear_weights(lam, tau):
    """A = int_0^tau e^{-lam r}(1 - r/tau) dr and B = int_0^tau e^{-lam r} r/tau dr."""
    x = lam * tau
    if x < 1e-2:
        # power series; the closed form cancels badly for small lambda * tau
        total = sum((-x) ** k / math.factorial(k + 1) for k in range(8))
        b = sum((-x) ** k / (math.factorial(k) * (k + 2)) for k in range(8))
        return tau * (total - b), tau * b
    em = math.exp(-x)
    total = -math.expm1(-x) / lam
    b = (1 - em - x * em) / (lam * x)
    return total - b, b


def gaussian_cell_masses(std: float, dx: float, width: float = 9.0) -> np.ndarray:
    """Normal(0, std^2) masses of the cells [(j - 1/2) dx, (j + 1/2) dx], |j| <= width std / dx."""
    r = max(1, int(math.ceil(width * std / dx)))
    j = np.arange(-r, r + 1)
    edges = (np.append(j - 0.5, r + 0.5)) * dx / std
    mass = np.diff(ndtr(edges))
    return mass / mass.sum()


def grid_semigroup(g: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """Discrete Gaussian smoothing along the last axis, constant extension past both edges."""
    r = (len(masses) - 1) // 2
    padded = np.concatenate([np.repeat(g[..., :1], r, axis=-1), g,
                             np.repeat(g[..., -1:], r, axis=-1)], axis=-1)
    return signal.fftconvolve(padded, masses[::-1], mode="valid", axes=-1)


def solve_u_lambda(model, lam: float, n_time: int = 64, dx: float = 2.0 ** -9, window: float = 8.0,
                   tol: float = 1e-10, max_iter: int = 200,
                   enforce_threshold: bool = True) -> KolmogorovSolution:
    """Picard iteration for u^lambda on [0, T] x [-window, window] (1-D, constant sigma).

    One time step of the mild equation is advanced with

        u_k = P_tau (A g_k + B g_{k+1} + exp(-lambda tau) u_{k+1}),

    where A, B integrate e^{-lambda r} against the linear interpolant of the
    source g = b + b du, and P_tau is the discrete Gaussian on the spatial grid.
    Its Fourier multiplier decays like the continuous one, so central
    differences of u stay bounded as dx shrinks.  The scheme is exact for
    constant drift.
    """
    if model.degenerate or model.n != 1:
        raise ValueError("the Picard solver is one-dimensional")
    if model.constant_diffusion is None:
        raise ValueError("the Picard solver needs a constant diffusion")
    if not model.meta.bounded:
        raise ValueError("the Picard solver needs a bounded drift")
    consts = constants(model)
    if enforce_threshold and lam < consts.lambda_min * (1 - 1e-12):
        raise ValueError(f"lambda={lam} is below the threshold {consts.lambda_min}")
    T = model.T
    tau = T / n_time
    nx = int(round(2 * window / dx)) + 1
    xs = -window + dx * np.arange(nx)
    times = tau * np.arange(n_time + 1)
    b = np.stack([model.drift(tk, xs[:, None])[:, 0] for tk in times])
    sigma = float(model.constant_diffusion[0, 0])
    masses = gaussian_cell_masses(abs(sigma) * math.sqrt(tau), dx)
    a_w, b_w = _exp_linear_weights(lam, tau)
    decay = math.exp(-lam * tau)

    u = np.zeros((n_time + 1, nx))
    grad = np.zeros_like(u)
    history = []
    rising = 0
    converged = False
    for _ in range(max_iter):
        g = b + b * grad
        new = np.zeros_like(u)
        for k in range(n_time - 1, -1, -1):
            new[k] = grid_semigroup(a_w * g[k] + b_w * g[k + 1] + decay * new[k + 1], masses)
        delta = float(np.max(np.abs(new - u)))
        u = new
        grad = central_gradient(u, dx)
        if history and delta > history[-1]:
            rising += 1
            if rising >= 3:
                raise NonContractionError(
                    f"Picard differences grew three times in a row at lambda={lam}; try a larger lambda")
        else:
            rising = 0
        history.append(delta)
        if delta < tol:
            converged = True
            break
    return KolmogorovSolution(lam, times, xs, u, grad, history, converged)


@dataclass
class Lemma21Report:
    grad_max: float
    grad_bound: float
    grad_tol: float
    hess_max: float
    hess_bound: float
    contraction: list

    @property
    def grad_ok(self) -> bool:
        return self.grad_max <= self.grad_bound + self.grad_tol

    @property
    def hess_ok(self) -> bool:
        return self.hess_max <= self.hess_bound

    @property
    def passed(self) -> bool:
        return self.grad_ok and self.hess_ok

    def to_text(self) -> str:
        return "\n".join([
            f"gradient\t{'PASS' if self.grad_ok else 'FAIL'}\tmax={self.grad_max:.10g}"
            f"\tbound={self.grad_bound:g}+{self.grad_tol:g}\tmargin={self.grad_bound + self.grad_tol - self.grad_max:.6g}",
            f"hessian\t{'PASS' if self.hess_ok else 'FAIL'}\tmax={self.hess_max:.10g}"
            f"\tbound={self.hess_bound:.10g}\tmargin={self.hess_bound - self.hess_max:.6g}",
            "contraction\t" + ",".join(f"{r:.4g}" for r in self.contraction)])


def check_lemma21(solution: KolmogorovSolution, consts: ConstantsReport,
                  grad_tol: float = 1e-3) -> Lemma21Report:
    grad_max = float(np.max(np.abs(solution.gradients)))
    hess_max = float(np.max(np.abs(solution.second_differences())))
    return Lemma21Report(grad_max, 0.5, grad_tol, hess_max, consts.hessian_bound(solution.lam),
                         solution.contraction_ratios())


def zvonkin_transform(solution: KolmogorovSolution, x, time_index: int = 0):
    """x + u^lambda_{t_k}(x) by linear interpolation on the solution grid."""
    x = np.asarray(x, dtype=float)
    lo, hi = solution.xs[0], solution.xs[-1]
    if np.any(x < lo) or np.any(x > hi):
        raise OutsideWindowError(f"x outside the solution window [{lo}, {hi}]")
    out = x + np.interp(x, solution.xs, solution.values[time_index])
    return float(out) if out.ndim == 0 else out
