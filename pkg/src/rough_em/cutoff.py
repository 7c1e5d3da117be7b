"""Smooth cut-off localisation of linear-growth models.

The profile is the bump quotient ``psi(r) = q(2 - r) / (q(2 - r) + q(r - 1))``
with ``q(s) = exp(-1/s)`` for ``s > 0`` and ``q(s) = 0`` otherwise: it equals 1
on [0, 1], 0 on [2, inf) and is smooth with all derivatives vanishing at 1 and 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .models import SdeModel, _norm, is_autonomous
from .modulus import Linear, Sum


@dataclass(frozen=True)
class CutoffSpec:
    k: float
    profile: str = "bump-quotient"

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("cut-off radius k must be positive")
        if self.profile != "bump-quotient":
            raise ValueError(f"unknown cut-off profile {self.profile!r}")


def _q(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def psi(r):
    """The unscaled profile, vectorised."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("psi is defined on [0, inf)")
    a = _q(2.0 - r)
    return a / (a + _q(r - 1.0))


def eval_psi(spec: CutoffSpec, r) -> float | np.ndarray:
    v = psi(r)
    return float(v) if v.ndim == 0 else v


def psi_derivative_sup(order: int = 1) -> float:
    """sup |psi'| (or |psi''|) on [1, 2], from a fine central-difference scan."""
    r = np.linspace(1.0, 2.0, 200_001)
    if order == 1:
        h = 1e-6
        d = (psi(r + h) - psi(r - h)) / (2 * h)
    else:
        h = 1e-4
        d = (psi(r + h) - 2 * psi(r) + psi(r - h)) / (h * h)
    return float(np.max(np.abs(d)))


def ball_grid(n: int, radius: float, points: int = 100_000) -> np.ndarray:
    """About ``points`` points covering the closed ball of the given radius."""
    if n == 1:
        return np.linspace(-radius, radius, points + 1)[:, None]
    if n == 2:
        side = int(math.ceil(math.sqrt(points * 4 / math.pi)))
        axis = np.linspace(-radius, radius, side)
        g = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
        return g[_norm(g) <= radius * (1 + 1e-12)]
    rng = np.random.default_rng(0)
    v = rng.normal(size=(points, n))
    v /= _norm(v)[:, None]
    return v * radius * rng.random((points, 1)) ** (1.0 / n)


def cutoff_model(model: SdeModel, k: float) -> SdeModel:
    """Drift b(t, x) psi(|x|/k) and diffusion sigma(t, psi(|x|/k) x), with bounded metadata."""
    if model.degenerate:
        raise TypeError("cut-off is defined for non-degenerate models")
    spec = CutoffSpec(float(k))
    k = spec.k
    base = model

    def scale(x):
        return psi(_norm(x) / k)

    def drift(t, x):
        return base.drift(t, x) * scale(x)[..., None]

    def squash(x):
        return scale(x)[..., None] * x

    const = base.constant_diffusion
    diffusion = None if const is not None else (lambda t, x: base.diffusion(t, squash(x)))

    def inverse(t, x):
        return base.diffusion_inverse(t, squash(x))

    grid = ball_grid(base.n, 2 * k)
    if is_autonomous(base):
        times = [0.0]
    else:
        times = np.linspace(0.0, base.T, 9)
    drift_sup = max(float(np.max(_norm(drift(t, grid)))) for t in times)
    meta = base.meta
    if const is None:
        sig = np.array(base.diffusion(0.0, grid))
        sig_sup = float(np.max(np.sqrt(np.sum(sig * sig, axis=(-2, -1)))))
        inv_sup = float(np.max(np.linalg.norm(np.linalg.inv(sig), ord=2, axis=(-2, -1))))
        # chain rule through x -> psi(|x|/k) x inflates derivatives by at most this factor
        stretch = 1.0 + 2.0 * psi_derivative_sup()
        curve = 3.0 * psi_derivative_sup() + 2.0 * psi_derivative_sup(2)
        meta_sigma = dict(diffusion_sup=sig_sup, inv_diffusion_sup=inv_sup,
                          grad_diffusion_sup=meta.grad_diffusion_sup * stretch,
                          hess_diffusion_sup=(meta.hess_diffusion_sup * stretch ** 2
                                              + meta.grad_diffusion_sup * curve / k),
                          grad_inv_diffusion_sup=meta.grad_inv_diffusion_sup * stretch)
    else:
        meta_sigma = {}
    # |b psi(x) - b psi(y)| <= phi(|x - y|) + sup_{|y| <= 2k} |b| * sup|psi'| / k * |x - y|
    raw_sup = max(float(np.max(_norm(base.drift(t, grid)))) for t in times)
    lip = raw_sup * psi_derivative_sup() / k
    new_meta = replace(meta, drift_sup=drift_sup, growth_constant=None,
                       spatial_modulus=Sum(meta.spatial_modulus, Linear(lip)), **meta_sigma)
    return SdeModel(f"{base.name}@k={k:g}", base.n, drift, diffusion, base.T, new_meta,
                    diffusion_inverse_fn=inverse, grad_diffusion_fn=None, constant_diffusion=const,
                    params={**base.params, "cutoff_k": k}, reference_points=base.reference_points,
                    window=2 * k + 1)


def local_modulus_constant(k: float, c0: float, form: str = "single") -> float:
    """Scale A_k of the local modulus A_k s**alpha: exp(c0 k^4) or exp(exp(c0 k^4)).

    Returns inf on overflow.
    """
    if form not in ("single", "double"):
        raise ValueError("form must be 'single' or 'double'")
    e = c0 * k ** 4
    try:
        v = math.exp(e)
        return math.exp(v) if form == "double" else v
    except OverflowError:
        return math.inf


def lambda_threshold_cutoff(constants, alpha: float, k: float, c0: float,
                            form: str = "double") -> float:
    """The lambda threshold for the cut-off model, evaluated as displayed.

    ``constants`` is a ConstantsReport computed for the cut-off model.
    """
    if not 0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    a_k = local_modulus_constant(k, c0, form)
    s = constants.diffusion_sup
    head = 2 * constants.upsilon * (a_k * s ** alpha * math.gamma(alpha / 2)
                                   + math.sqrt(s) * math.gamma(0.25))
    try:
        first = head ** (2 / alpha)
    except OverflowError:
        first = math.inf
    b = constants.drift_sup
    lam = constants.lam
    return first + 9 * math.pi * lam ** 2 * b ** 2 + 4 * (b + lam) ** 2
