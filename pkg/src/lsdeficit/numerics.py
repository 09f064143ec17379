"""Quadrature engines.

Gauss-Hermite rules for integrals against the standard Gaussian, per-component
Gauss-Hermite (or stratified Monte Carlo when the dimension exceeds two) for
expectations under Gaussian mixtures, Gauss-Legendre for finite intervals and
the split time-axis scheme used for integrals over t in [0, inf).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import IntegrationWarning, quad
from scipy.special import roots_hermitenorm

from .errors import ToleranceExceededError

# 99% two-sided normal quantile
_Z99 = 2.5758293035489004


@dataclass(frozen=True)
class Estimate:
    """A numerical value together with an absolute error estimate."""

    value: float
    error: float = 0.0

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class QuadratureConfig:
    """Orders, tolerances and Monte Carlo settings.

    Parameters
    ----------
    gh_order : int
        Gauss-Hermite order per axis in dimension one.
    gh_order_2d : int
        Gauss-Hermite order per axis for the tensor rule in dimension two.
    tol : float
        Target tolerance of adaptive rules.
    mc_samples : int
        Monte Carlo sample count, used when the dimension is at least three.
    seed : int
        Seed of the Monte Carlo streams.
    time_split, time_max : float
        Split point and truncation point of the time-axis scheme.
    """

    gh_order: int = 128
    gh_order_2d: int = 64
    tol: float = 1e-9
    mc_samples: int = 1_000_000
    seed: int = 0
    time_split: float = 0.05
    time_max: float = 12.0

    def __post_init__(self):
        if self.gh_order < 8 or self.gh_order_2d < 8:
            raise ValueError("Gauss-Hermite orders must be >= 8")
        if not 0.0 < self.tol <= 1e-2:
            raise ValueError("tol must lie in (0, 1e-2]")
        if self.mc_samples < 100:
            raise ValueError("mc_samples must be >= 100")
        if not 0.0 < self.time_split < self.time_max:
            raise ValueError("need 0 < time_split < time_max")

    def order_for(self, dim: int) -> int:
        return self.gh_order if dim == 1 else self.gh_order_2d

    def doubled(self) -> "QuadratureConfig":
        return QuadratureConfig(
            gh_order=2 * self.gh_order,
            gh_order_2d=2 * self.gh_order_2d,
            tol=self.tol,
            mc_samples=2 * self.mc_samples,
            seed=self.seed,
            time_split=self.time_split,
            time_max=self.time_max,
        )

    @property
    def time_quadrature(self) -> "TimeQuadrature":
        return TimeQuadrature(t_split=self.time_split, t_max=self.time_max, tol=self.tol)


DEFAULT_CONFIG = QuadratureConfig()


@lru_cache(maxsize=None)
def gauss_hermite(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights with ``sum(w * g(x)) ~ E g(N)`` for ``N ~ N(0, 1)``."""
    x, w = roots_hermitenorm(order)
    w = w / math.sqrt(2.0 * math.pi)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def tensor_gauss_hermite(dim: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule for the standard Gaussian on R^dim (dim <= 2)."""
    x, w = gauss_hermite(order)
    if dim == 1:
        nodes, weights = x[:, None].copy(), w.copy()
    elif dim == 2:
        xx, yy = np.meshgrid(x, x, indexing="ij")
        nodes = np.column_stack([xx.ravel(), yy.ravel()])
        weights = np.outer(w, w).ravel()
    else:
        raise ValueError("tensor Gauss-Hermite is limited to dimension <= 2")
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def integrate_gamma(g: Callable[[np.ndarray], np.ndarray], dim: int = 1,
                    cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """Integrate ``g`` against the standard Gaussian on R^dim.

    ``g`` maps an ``(N, dim)`` array of points to ``N`` values. The error is
    the difference between the configured order and its doubling; for
    ``dim >= 3`` a seeded Monte Carlo estimate with a 99% interval is used.
    """
    if dim >= 3:
        return mixture_expect(np.ones(1), np.zeros((1, dim)), np.eye(dim)[None], g, cfg)
    order = cfg.order_for(dim)
    lo = _apply_rule(g, *tensor_gauss_hermite(dim, order))
    hi = _apply_rule(g, *tensor_gauss_hermite(dim, 2 * order))
    return Estimate(float(hi), float(abs(hi - lo)))


_CHUNK = 1 << 15


def _apply_rule(g, nodes, weights):
    total = 0.0
    for a in range(0, len(nodes), _CHUNK):
        vals = np.asarray(g(nodes[a:a + _CHUNK]), dtype=float)
        total = total + np.tensordot(weights[a:a + _CHUNK], vals, axes=(0, 0))
    return total


@dataclass(frozen=True)
class MixtureRule:
    """Weighted point set approximating expectations under a Gaussian mixture.

    ``strata`` holds, for Monte Carlo rules, the slice of points belonging to
    each component so that a stratified variance can be formed.
    """

    points: np.ndarray
    weights: np.ndarray
    monte_carlo: bool = False
    strata: tuple = field(default=())

    def expect(self, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return _apply_rule(g, self.points, self.weights)


def mixture_rule(weights: np.ndarray, means: np.ndarray, chols: np.ndarray,
                 cfg: QuadratureConfig = DEFAULT_CONFIG) -> MixtureRule:
    """Build a rule for ``E g(X)`` with ``X`` a Gaussian mixture.

    Parameters
    ----------
    weights : (K,) array
    means : (K, n) array
    chols : (K, n, n) array
        Lower Cholesky factors of the component covariances.
    """
    k, dim = means.shape
    if dim <= 2:
        z, wz = tensor_gauss_hermite(dim, cfg.order_for(dim))
        pts = means[:, None, :] + np.einsum("kij,mj->kmi", chols, z)
        wts = weights[:, None] * wz[None, :]
        return MixtureRule(pts.reshape(-1, dim), wts.ravel())
    # stratified Monte Carlo: component k receives about N * w_k samples
    streams = np.random.SeedSequence(cfg.seed).spawn(k)
    pts, wts, strata, start = [], [], [], 0
    for j in range(k):
        nk = max(2, int(round(cfg.mc_samples * weights[j])))
        rng = np.random.default_rng(streams[j])
        zj = rng.standard_normal((nk, dim))
        pts.append(means[j] + zj @ chols[j].T)
        wts.append(np.full(nk, weights[j] / nk))
        strata.append((start, start + nk, float(weights[j])))
        start += nk
    return MixtureRule(np.vstack(pts), np.concatenate(wts), monte_carlo=True,
                       strata=tuple(strata))


def mixture_expect(weights, means, chols, g, cfg: QuadratureConfig = DEFAULT_CONFIG,
                   with_error: bool = True) -> Estimate:
    """``E g(X)`` under a Gaussian mixture, with an error estimate.

    Gauss-Hermite rules report the order-doubling difference; Monte Carlo
    rules report the half-width of a 99% stratified confidence interval.
    ``g`` may return arrays of shape ``(N, ...)``; value and error then carry
    the trailing shape. ``with_error=False`` skips the error estimate (the
    error is then NaN), which halves the cost inside adaptive outer loops.
    """
    rule = mixture_rule(weights, means, chols, cfg)
    if not with_error:
        return Estimate(rule.expect(g), float("nan"))
    if rule.monte_carlo:
        value, var = 0.0, 0.0
        for a, b, wk in rule.strata:
            s1, s2 = 0.0, 0.0
            for c in range(a, b, _CHUNK):
                vals = np.asarray(g(rule.points[c:min(b, c + _CHUNK)]), dtype=float)
                s1 = s1 + vals.sum(axis=0)
                s2 = s2 + (vals * vals).sum(axis=0)
            nk = b - a
            mean = s1 / nk
            value = value + wk * mean
            var = var + wk ** 2 * np.maximum(s2 / nk - mean * mean, 0.0) * nk / (nk - 1) / nk
        return Estimate(value, _Z99 * np.sqrt(var))
    value_lo = rule.expect(g)
    value = mixture_rule(weights, means, chols, cfg.doubled()).expect(g)
    return Estimate(value, np.abs(value - value_lo))


@dataclass(frozen=True)
class TimeQuadrature:
    """Split scheme for integrals over t in [0, inf).

    On ``[0, t_split]`` the near-zero integrand form is integrated in ``t``;
    on ``[t_split, t_max]`` the far form is integrated adaptively in
    ``s = exp(-2 t)``; the remainder beyond ``t_max`` is bounded assuming
    decay ``exp(-rate * (t - t_max))`` and enters the error budget only.
    """

    t_split: float = 0.05
    t_max: float = 12.0
    tol: float = 1e-9

    def __post_init__(self):
        if not 0.0 < self.t_split < self.t_max:
            raise ValueError("need 0 < t_split < t_max")
        if not 0.0 < self.tol <= 1e-2:
            raise ValueError("tol must lie in (0, 1e-2]")


def _split(value):
    if isinstance(value, Estimate):
        return float(value.value), float(value.error)
    return float(value), 0.0


def integrate_time_axis(near: Callable[[float], float | Estimate],
                        far: Callable[[float], float | Estimate] | None,
                        tq: TimeQuadrature, decay_rate: float = 4.0,
                        error_nodes: int = 24) -> Estimate:
    """Integrate a nonnegative-time integrand over [0, inf).

    Parameters
    ----------
    near : callable
        Integrand form used on ``[0, t_split]``. May return an
        :class:`Estimate`, whose error (the spatial quadrature error) is then
        integrated with a fixed Gauss-Legendre rule and added to the budget.
    far : callable or None
        Integrand form used on ``[t_split, t_max]``; defaults to ``near``.
    decay_rate : float
        Exponential decay rate assumed for the tail bound.
    """
    far = near if far is None else far
    opts = dict(epsabs=tq.tol, epsrel=tq.tol, limit=200)
    s_lo, s_hi = math.exp(-2.0 * tq.t_max), math.exp(-2.0 * tq.t_split)

    def far_s(s):
        return far(-0.5 * math.log(s))

    # convergence trouble surfaces through the error check below
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        v1, e1 = quad(lambda t: _split(near(t))[0], 0.0, tq.t_split, **opts)
        v2, e2 = quad(lambda s: _split(far_s(s))[0] / (2.0 * s), s_lo, s_hi, **opts)
    tail = abs(_split(far(tq.t_max))[0]) / decay_rate
    spatial = 0.0
    if isinstance(near(tq.t_split), Estimate):
        x, w = gauss_legendre(0.0, tq.t_split, error_nodes)
        spatial += sum(wi * _split(near(xi))[1] for xi, wi in zip(x, w))
        x, w = gauss_legendre(s_lo, s_hi, error_nodes)
        spatial += sum(wi * _split(far_s(xi))[1] / (2.0 * xi) for xi, wi in zip(x, w))
    value = v1 + v2
    error = e1 + e2 + tail + spatial
    if e1 + e2 > 1e3 * tq.tol * max(1.0, abs(value)):
        raise ToleranceExceededError(
            f"time quadrature error {e1 + e2:.3e} exceeds tolerance", value, error)
    return Estimate(value, error)
