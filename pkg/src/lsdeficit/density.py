"""Probability densities relative to the standard Gaussian measure.

A :class:`RelativeDensity` represents ``f = d mu / d gamma``. It is backed
either by a :class:`GaussianMixture` (the canonical family, closed under the
Ornstein-Uhlenbeck flow) or by a :class:`Tabulated1D` Lebesgue density.
All objects are immutable; moments are computed eagerly at construction.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import simpson, trapezoid
from scipy.interpolate import CubicSpline
from scipy.special import logsumexp

from .errors import SpecError, UnsupportedFamilyError
from .numerics import DEFAULT_CONFIG, Estimate, QuadratureConfig, mixture_expect

MAX_DIM = 8
_LOG_2PI = math.log(2.0 * math.pi)


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(1, -1) if dim > 1 or x.shape[0] == 1 else x.reshape(-1, 1)
    if x.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim}, got {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Finite mixture of Gaussians on R^n (Lebesgue densities).

    Parameters
    ----------
    weights : (K,) array_like
    means : (K, n) array_like
    covs : (K, n, n) array_like
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    chols: np.ndarray = field(init=False, repr=False)
    precisions: np.ndarray = field(init=False, repr=False)
    _chol_inv: np.ndarray = field(init=False, repr=False)
    _log_norm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        m = np.asarray(self.means, dtype=float)
        if m.ndim == 1:
            m = m.reshape(len(w), -1)
        k, n = m.shape
        c = np.asarray(self.covs, dtype=float).reshape(k, n, n)
        if len(w) != k or k == 0:
            raise SpecError("weights and means disagree in number of components")
        if n < 1 or n > MAX_DIM:
            raise SpecError(f"dimension must be in [1, {MAX_DIM}], got {n}")
        if np.any(w <= 0.0) or np.any(w > 1.0):
            raise SpecError("weights must lie in (0, 1]")
        if abs(w.sum() - 1.0) > 1e-12:
            raise SpecError(f"weights sum to {float(w.sum())!r}, not 1")
        if not np.all(np.isfinite(m)) or not np.all(np.isfinite(c)):
            raise SpecError("non-finite mean or covariance")
        if np.max(np.abs(c - c.transpose(0, 2, 1))) > 1e-12:
            raise SpecError("covariances must be symmetric")
        c = 0.5 * (c + c.transpose(0, 2, 1))
        if np.min(np.linalg.eigvalsh(c)) <= 1e-10:
            raise SpecError("covariance eigenvalues must exceed 1e-10")
        chols = np.linalg.cholesky(c)
        chol_inv = np.linalg.inv(chols)
        logdet = 2.0 * np.log(np.diagonal(chols, axis1=1, axis2=2)).sum(axis=1)
        for name, val in (("weights", w), ("means", m), ("covs", c), ("chols", chols),
                          ("precisions", chol_inv.transpose(0, 2, 1) @ chol_inv),
                          ("_chol_inv", chol_inv),
                          ("_log_norm", np.log(w) - 0.5 * logdet - 0.5 * n * _LOG_2PI)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def gaussian(cls, mean, cov) -> "GaussianMixture":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.asarray(cov, dtype=float).reshape(len(mean), len(mean))
        return cls([1.0], mean[None, :], cov[None, :, :])

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    def _component_terms(self, x):
        """Per-component ``log(w_k N(x; m_k, S_k))`` and precision-weighted residuals."""
        diff = x[:, None, :] - self.means[None, :, :]
        y = np.einsum("kij,nkj->nki", self._chol_inv, diff)
        logc = self._log_norm[None, :] - 0.5 * np.sum(y * y, axis=-1)
        g = -np.einsum("kij,nkj->nki", self.precisions, diff)
        return logc, g

    def logpdf(self, x) -> np.ndarray:
        logc, _ = self._component_terms(_as_points(x, self.dim))
        return logsumexp(logc, axis=1)

    def responsibilities(self, x) -> np.ndarray:
        logc, _ = self._component_terms(_as_points(x, self.dim))
        return np.exp(logc - logsumexp(logc, axis=1, keepdims=True))

    def log_derivatives(self, x):
        """Return ``(log p, grad log p, Hess log p)`` at the points ``x``."""
        x = _as_points(x, self.dim)
        logc, g = self._component_terms(x)
        lse = logsumexp(logc, axis=1, keepdims=True)
        r = np.exp(logc - lse)
        gbar = np.einsum("nk,nki->ni", r, g)
        hess = (-np.einsum("nk,kij->nij", r, self.precisions)
                + np.einsum("nk,nki,nkj->nij", r, g, g)
                - np.einsum("ni,nj->nij", gbar, gbar))
        return lse[:, 0], gbar, hess

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def second_moment_matrix(self) -> np.ndarray:
        outer = np.einsum("ki,kj->kij", self.means, self.means)
        return np.einsum("k,kij->ij", self.weights, self.covs + outer)

    def covariance(self) -> np.ndarray:
        b = self.mean()
        cov = self.second_moment_matrix() - np.outer(b, b)
        return 0.5 * (cov + cov.T)

    def shifted(self, b) -> "GaussianMixture":
        """Law of ``X - b``."""
        return GaussianMixture(self.weights, self.means - np.asarray(b, dtype=float)[None, :],
                               self.covs)

    def ou_pushforward(self, t: float) -> "GaussianMixture":
        """Law of ``exp(-t) X + sqrt(1 - exp(-2t)) N``."""
        a = math.exp(-t)
        if t == 0.0:
            return self
        eye = np.eye(self.dim)
        return GaussianMixture(self.weights, a * self.means,
                               a * a * self.covs + (-math.expm1(-2.0 * t)) * eye[None])

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(self.n_components, size=size, p=self.weights)
        z = rng.standard_normal((size, self.dim))
        return self.means[comp] + np.einsum("nij,nj->ni", self.chols[comp], z)

    def expect(self, g, cfg: QuadratureConfig = DEFAULT_CONFIG, with_error: bool = True) -> Estimate:
        return mixture_expect(self.weights, self.means, self.chols, g, cfg, with_error)

    def to_spec(self) -> dict:
        return {
            "dim": self.dim,
            "family": "mixture",
            "components": [
                {"weight": float(w), "mean": m.tolist(), "cov": c.tolist()}
                for w, m, c in zip(self.weights, self.means, self.covs)
            ],
        }


@dataclass(frozen=True, eq=False)
class Tabulated1D:
    """Lebesgue density on a grid, interpolated by a not-a-knot cubic spline.

    Interpolated values are clipped at zero and vanish outside the grid.
    """

    grid: np.ndarray
    values: np.ndarray
    _interp: Any = field(init=False, repr=False)
    _cdf: Any = field(init=False, repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != vals.shape or len(grid) < 5:
            raise SpecError("grid and values must be 1-D arrays of equal length >= 5")
        if np.any(np.diff(grid) <= 0.0):
            raise SpecError("grid must be strictly increasing")
        if np.any(vals < 0.0) or not np.all(np.isfinite(vals)):
            raise SpecError("values must be finite and nonnegative")
        if abs(trapezoid(vals, grid) - 1.0) > 1e-6:
            raise SpecError("tabulated density mass differs from 1 by more than 1e-6")
        if vals[0] >= 1e-12 or vals[-1] >= 1e-12:
            raise SpecError("tabulated density must vanish (< 1e-12) at the grid ends")
        interp = CubicSpline(grid, vals, extrapolate=False)
        grid.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_cdf", interp.antiderivative())

    dim = 1

    def pdf(self, x, nu: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self._interp(x, nu)
        out = np.where(np.isnan(out), 0.0, out)
        return np.maximum(out, 0.0) if nu == 0 else out

    def cdf(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), self.grid[0], self.grid[-1])
        total = float(self._cdf(self.grid[-1]))
        return self._cdf(x) / total

    def moment(self, g) -> float:
        return float(simpson(g(self.grid) * self.values, x=self.grid))

    def mean(self) -> np.ndarray:
        return np.array([self.moment(lambda x: x)])

    def covariance(self) -> np.ndarray:
        b = self.mean()[0]
        return np.array([[self.moment(lambda x: (x - b) ** 2)]])

    def shifted(self, b) -> "Tabulated1D":
        return Tabulated1D(self.grid - float(np.asarray(b).ravel()[0]), self.values)

    def to_spec(self) -> dict:
        return {"dim": 1, "family": "tabulated1d", "grid": self.grid.tolist(),
                "values": self.values.tolist()}


class RelativeDensity:
    """Density ``f`` of ``mu`` with respect to the standard Gaussian ``gamma``.

    Parameters
    ----------
    backing : GaussianMixture or Tabulated1D
    """

    def __init__(self, backing):
        if not isinstance(backing, (GaussianMixture, Tabulated1D)):
            raise UnsupportedFamilyError(f"unsupported backing {type(backing).__name__}")
        self.backing = backing
        b = np.asarray(backing.mean(), dtype=float)
        cov = np.asarray(backing.covariance(), dtype=float)
        self._barycenter = b
        self._covariance = cov
        self._second_moment = float(np.trace(cov) + b @ b)
        for arr in (self._barycenter, self._covariance):
            arr.setflags(write=False)

    def __repr__(self):
        return f"RelativeDensity({self.backing!r})"

    @property
    def dim(self) -> int:
        return self.backing.dim

    @property
    def is_mixture(self) -> bool:
        return isinstance(self.backing, GaussianMixture)

    @property
    def mixture(self) -> GaussianMixture:
        if not self.is_mixture:
            raise UnsupportedFamilyError("operation requires a Gaussian-mixture density")
        return self.backing

    @property
    def barycenter(self) -> np.ndarray:
        return self._barycenter

    @property
    def covariance(self) -> np.ndarray:
        return self._covariance

    @property
    def second_moment(self) -> float:
        """``int |x|^2 d mu``."""
        return self._second_moment

    def is_centered(self, tol: float = 1e-10) -> bool:
        return bool(np.linalg.norm(self._barycenter) <= tol)

    # pointwise evaluation -------------------------------------------------

    def log_derivatives(self, x):
        """Return ``(log f, grad log f, Hess log f)`` at ``x`` (shape ``(N, n)``)."""
        x = _as_points(x, self.dim)
        n = self.dim
        if self.is_mixture:
            lp, gp, hp = self.backing.log_derivatives(x)
        else:
            t = x[:, 0]
            p = self.backing.pdf(t)
            p1 = self.backing.pdf(t, 1)
            p2 = self.backing.pdf(t, 2)
            with np.errstate(divide="ignore", invalid="ignore"):
                lp = np.log(p)
                s1 = p1 / p
                s2 = p2 / p - s1 * s1
            gp, hp = s1[:, None], s2[:, None, None]
        lf = lp + 0.5 * np.sum(x * x, axis=1) + 0.5 * n * _LOG_2PI
        return lf, gp + x, hp + np.eye(n)[None]

    def log_value(self, x) -> np.ndarray:
        return self.log_derivatives(x)[0]

    def value(self, x) -> np.ndarray:
        return np.exp(self.log_value(x))

    def grad(self, x) -> np.ndarray:
        lf, gl, _ = self.log_derivatives(x)
        return np.exp(lf)[:, None] * gl

    def hess(self, x) -> np.ndarray:
        lf, gl, hl = self.log_derivatives(x)
        return np.exp(lf)[:, None, None] * (hl + np.einsum("ni,nj->nij", gl, gl))

    def lebesgue_pdf(self, x) -> np.ndarray:
        x = _as_points(x, self.dim)
        if self.is_mixture:
            return np.exp(self.backing.logpdf(x))
        return self.backing.pdf(x[:, 0])

    # integration -----------------------------------------------------------

    def expect(self, g, cfg: QuadratureConfig = DEFAULT_CONFIG, with_error: bool = True) -> Estimate:
        """``E_mu g(X) = int g f d gamma`` with an error estimate.

        ``g`` maps ``(N, n)`` points to ``(N, ...)`` values. Tabulated
        densities integrate on the grid with composite Simpson; the error is
        the difference with the half-resolution grid.
        """
        if self.is_mixture:
            return self.backing.expect(g, cfg, with_error)
        grid, vals = self.backing.grid, self.backing.values
        gv = np.asarray(g(grid[:, None]), dtype=float)
        integrand = gv * vals.reshape((-1,) + (1,) * (gv.ndim - 1))
        full = simpson(integrand, x=grid, axis=0)
        half = simpson(integrand[::2], x=grid[::2], axis=0)
        return Estimate(full, np.abs(full - half))

    # serialization ---------------------------------------------------------

    def to_spec(self) -> dict:
        return self.backing.to_spec()

    @property
    def spec_hash(self) -> str:
        return spec_hash(self.to_spec())


def spec_hash(spec: dict) -> str:
    """SHA-256 of the canonical JSON encoding of a DensitySpec."""
    canon = json.dumps(spec, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def from_spec(spec: dict) -> RelativeDensity:
    """Build a density from a DensitySpec dictionary."""
    if not isinstance(spec, dict):
        raise SpecError("density spec must be a JSON object")
    family = spec.get("family")
    try:
        if family == "mixture":
            comps = spec["components"]
            if not isinstance(comps, list) or not comps:
                raise SpecError("mixture needs a non-empty component list")
            dim = int(spec["dim"])
            weights = [float(c["weight"]) for c in comps]
            means = np.array([c["mean"] for c in comps], dtype=float).reshape(len(comps), -1)
            covs = np.array([c["cov"] for c in comps], dtype=float)
            if means.shape[1] != dim or covs.shape != (len(comps), dim, dim):
                raise SpecError("component shapes disagree with dim")
            return RelativeDensity(GaussianMixture(weights, means, covs))
        if family == "tabulated1d":
            if int(spec.get("dim", 1)) != 1:
                raise SpecError("tabulated1d is one-dimensional")
            return RelativeDensity(Tabulated1D(spec["grid"], spec["values"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"malformed density spec: {exc}") from exc
    raise SpecError(f"unknown family {family!r}")


def gaussian(mean, cov) -> RelativeDensity:
    return RelativeDensity(GaussianMixture.gaussian(mean, cov))


def mixture(weights, means, covs) -> RelativeDensity:
    return RelativeDensity(GaussianMixture(weights, means, covs))


def make_extremal(b) -> RelativeDensity:
    """The extremal ``e_b(x) = exp(b.x - |b|^2/2)``, i.e. ``N(b, Id)``."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    return gaussian(b, np.eye(len(b)))


def standard_gaussian(dim: int = 1) -> RelativeDensity:
    return make_extremal(np.zeros(dim))


def barycenter_covariance(d: RelativeDensity) -> tuple[np.ndarray, np.ndarray]:
    return d.barycenter.copy(), d.covariance.copy()


def recenter(d: RelativeDensity) -> RelativeDensity:
    """Shifted density ``f_b(x) = f(x + b) exp(-(b.x + |b|^2/2))`` (law of ``X - b``)."""
    return RelativeDensity(d.backing.shifted(d.barycenter))
