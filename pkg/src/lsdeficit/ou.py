"""Exact Ornstein-Uhlenbeck evolution of Gaussian mixtures and posterior laws.

With ``X ~ mu`` and ``N ~ gamma`` independent, ``X_t = e^{-t} X +
sqrt(1 - e^{-2t}) N`` has law ``P_t f d gamma``. For a mixture, each
component of ``(X, X_t)`` is jointly Gaussian, so ``E(X | X_t)`` and
``Cov(X | X_t)`` are closed-form mixtures over posterior responsibilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import GaussianMixture, RelativeDensity, _as_points
from .errors import DegenerateConditioningError, UnsupportedFamilyError
from .numerics import DEFAULT_CONFIG, Estimate, QuadratureConfig, tensor_gauss_hermite


def _mixture_of(d) -> GaussianMixture:
    if isinstance(d, GaussianMixture):
        return d
    if isinstance(d, RelativeDensity) and d.is_mixture:
        return d.backing
    raise UnsupportedFamilyError("Ornstein-Uhlenbeck evolution requires a Gaussian mixture")


@dataclass(frozen=True, eq=False)
class EvolvedDensity:
    """``P_t f`` for a mixture-backed ``f``."""

    base: GaussianMixture
    t: float
    evolved: GaussianMixture

    @property
    def density(self) -> RelativeDensity:
        return RelativeDensity(self.evolved)


def evolve(d, t: float) -> EvolvedDensity:
    """Exact pushforward of ``d`` by the OU flow at time ``t >= 0``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    base = _mixture_of(d)
    return EvolvedDensity(base, float(t), base.ou_pushforward(float(t)))


class PosteriorState:
    """Conditional law of ``X`` given ``X_t = x`` for a mixture ``X``.

    Per component ``k`` with ``X ~ N(m, S)``, ``a = e^{-t}`` and
    ``V = a^2 S + (1 - a^2) Id``::

        E(X | X_t = x, k)   = m + a S V^{-1} (x - a m)
        Cov(X | X_t = x, k) = S - a^2 S V^{-1} S
    """

    def __init__(self, d, t: float):
        if t <= 0.0:
            raise DegenerateConditioningError("conditioning on X_t requires t > 0")
        self.base = _mixture_of(d)
        self.t = float(t)
        self.a = math.exp(-t)
        self.v = -math.expm1(-2.0 * t)
        self.evolved = self.base.ou_pushforward(self.t)
        a = self.a
        # gain_k = a S_k V_k^{-1}, symmetric factorization through the evolved precisions
        self.gains = a * self.base.covs @ self.evolved.precisions
        cc = self.base.covs - a * self.gains @ self.base.covs
        self.cond_covs = 0.5 * (cc + cc.transpose(0, 2, 1))

    def responsibilities(self, x) -> np.ndarray:
        return self.evolved.responsibilities(x)

    def component_means(self, x) -> np.ndarray:
        """``(N, K, n)`` per-component conditional means."""
        x = _as_points(x, self.base.dim)
        resid = x[:, None, :] - self.a * self.base.means[None, :, :]
        return self.base.means[None] + np.einsum("kij,nkj->nki", self.gains, resid)

    def mean(self, x) -> np.ndarray:
        x = _as_points(x, self.base.dim)
        r = self.responsibilities(x)
        return np.einsum("nk,nki->ni", r, self.component_means(x))

    def second_moment(self, x) -> np.ndarray:
        """``E(X X^T | X_t = x)``."""
        x = _as_points(x, self.base.dim)
        r = self.responsibilities(x)
        mk = self.component_means(x)
        return (np.einsum("nk,kij->nij", r, self.cond_covs)
                + np.einsum("nk,nki,nkj->nij", r, mk, mk))

    def cov(self, x) -> np.ndarray:
        """``Z_t(x) = Cov(X | X_t = x)`` by the law of total variance."""
        x = _as_points(x, self.base.dim)
        r = self.responsibilities(x)
        mk = self.component_means(x)
        u = np.einsum("nk,nki->ni", r, mk)
        dev = mk - u[:, None, :]
        z = (np.einsum("nk,kij->nij", r, self.cond_covs)
             + np.einsum("nk,nki,nkj->nij", r, dev, dev))
        return 0.5 * (z + z.transpose(0, 2, 1))

    def expect(self, g, cfg: QuadratureConfig = DEFAULT_CONFIG, with_error: bool = True) -> Estimate:
        """Expectation of ``g(X_t)`` under the law of ``X_t``."""
        return self.evolved.expect(g, cfg, with_error)


def posterior(d, t: float) -> PosteriorState:
    return PosteriorState(d, t)


def conditional_mean(d, t: float, x) -> np.ndarray:
    """``E(X | X_t = x)``, equal to ``P_t(x f) / P_t f`` at ``x``."""
    return PosteriorState(d, t).mean(x)


def conditional_cov(d, t: float, x) -> np.ndarray:
    return PosteriorState(d, t).cov(x)


def mmse_fisher(d, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """``E |E(X | X_t) - e^{-t} X_t|^2``, which equals ``4 sinh(t)^2 I(P_t f)``."""
    post = PosteriorState(d, t)
    a = post.a

    def g(x):
        resid = post.mean(x) - a * x
        return np.sum(resid * resid, axis=1)

    est = post.expect(g, cfg)
    return Estimate(float(est.value), float(est.error))


def ou_apply(g, t: float, x, order: int = 160, scale: float = 1.0) -> np.ndarray:
    """``P_t g(x) = E g(e^{-t} x + sqrt(1 - e^{-2t}) N)`` by Gauss-Hermite in ``N``.

    This is the direct Mehler-integral route and does not use any mixture
    algebra. ``scale > 1`` widens the node set for integrands growing like
    ``exp(c |y|^2)``; the weights are corrected for the change of variable.
    ``g`` maps ``(M, n)`` points to ``(M, ...)`` values; the result has shape
    ``(N, ...)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    dim = x.shape[1]
    if dim > 2:
        raise ValueError("ou_apply supports dimension <= 2")
    z, w = tensor_gauss_hermite(dim, order)
    y = scale * z
    sq = np.sum(z * z, axis=1)
    w = w * scale ** dim * np.exp(-0.5 * (scale ** 2 - 1.0) * sq)
    a = math.exp(-t)
    s = math.sqrt(-math.expm1(-2.0 * t))
    out = []
    for xi in x:
        vals = np.asarray(g(a * xi[None, :] + s * y), dtype=float)
        out.append(np.tensordot(w, vals, axes=(0, 0)))
    return np.array(out)


__all__ = [
    "EvolvedDensity",
    "PosteriorState",
    "conditional_cov",
    "conditional_mean",
    "evolve",
    "mmse_fisher",
    "ou_apply",
    "posterior",
]
