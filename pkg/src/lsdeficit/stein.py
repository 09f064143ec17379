"""Stein kernels, Stein discrepancy and certified lower bounds on Stein functionals.

The functionals

    D(mu)       = sup_{phi in B}     |E[X phi(X) - grad phi(X)]|
    D_eps(mu)   = sup_{phi in R_eps} |E[X phi(X) - grad phi(X)]|

are suprema over infinite classes. This module evaluates the maximum over
explicit finite families whose members are admissible by construction, so the
returned numbers are lower bounds of the suprema.

Class B members are sinusoids ``c sin(lam alpha.x + theta)`` with
``c = 1 / max(1, |lam|, lam^2)``. Class R_eps members are
``R_eps psi = 4 int_s^inf e^{-4t} P_t psi dt`` (``e^{-4s} = eps``) for Hermite
or Fourier ``psi`` scaled so that ``sup_t int psi^2 P_t f d gamma <= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermeval
from scipy.integrate import cumulative_simpson, quad
from scipy.interpolate import PchipInterpolator
from scipy.special import log_ndtr, logsumexp

from .density import GaussianMixture, RelativeDensity, _as_points
from .errors import (InequalityViolationError, PreconditionError,
                     UnsupportedFamilyError)
from .functionals import fisher
from .numerics import DEFAULT_CONFIG, Estimate, QuadratureConfig, gauss_legendre
from .ou import evolve, ou_apply

DEFAULT_FREQUENCIES = tuple(np.round(np.arange(1, 31) * 0.1, 10))
FOURIER_FREQUENCIES = tuple(np.arange(1, 13) * 0.25)
NORMALIZATION_SAFETY = 1.05
_GL_ORDER = 64


def _centered(d: RelativeDensity) -> bool:
    return bool(np.linalg.norm(d.barycenter) <= 1e-10 * max(1.0, math.sqrt(d.second_moment)))


def _directions(dim: int, n_angles: int = 8) -> np.ndarray:
    """Unit directions; antipodal pairs are redundant for the families used here."""
    if dim == 1:
        return np.ones((1, 1))
    if dim == 2:
        ang = np.pi * np.arange(n_angles) / n_angles
        return np.column_stack([np.cos(ang), np.sin(ang)])
    return np.eye(dim)


# --------------------------------------------------------------------------
# Stein kernel in dimension one


class SteinKernel1D:
    """``tau(x) = (1 / p(x)) int_x^inf y p(y) dy`` for a centered 1-D law.

    ``domain`` is the interval on which the kernel is trusted; outside it
    (tabulated densities with vanishing values) evaluation returns NaN.
    """

    def __init__(self, d: RelativeDensity):
        if d.dim != 1:
            raise UnsupportedFamilyError("Stein kernels are built in dimension one only")
        if not _centered(d):
            raise PreconditionError("the Stein kernel formula requires a centered density")
        self.density = d
        backing = d.backing
        if isinstance(backing, GaussianMixture):
            self._mix = backing
            self.domain = (-math.inf, math.inf)
            return
        self._mix = None
        grid, p = backing.grid, backing.values
        # tail integral int_x^inf y p(y) dy, accumulated from the right
        rev = cumulative_simpson((grid * p)[::-1], x=-grid[::-1], initial=0.0)[::-1]
        valid = p > 1e-8 * p.max()
        idx = np.flatnonzero(valid)
        lo, hi = idx[0], idx[-1]
        self.domain = (float(grid[lo]), float(grid[hi]))
        self._tau = PchipInterpolator(grid[lo:hi + 1], rev[lo:hi + 1] / p[lo:hi + 1],
                                      extrapolate=False)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if self._mix is None:
            return self._tau(x)
        mix = self._mix
        m = mix.means[:, 0]
        sd = np.sqrt(mix.covs[:, 0, 0])
        logc, _ = mix._component_terms(x[:, None])
        lp = logsumexp(logc, axis=1, keepdims=True)
        r = np.exp(logc - lp)
        gauss_part = r @ (sd * sd)
        # centering turns sum w m Phi-bar into -sum w m Phi; use the small tail on each side
        left = x[:, None] < 0
        z = (x[:, None] - m) / sd
        log_tail = np.log(mix.weights)[None, :] + log_ndtr(np.where(left, z, -z)) - lp
        return gauss_part + (np.where(left, -1.0, 1.0) * np.exp(log_tail)) @ m


def stein_kernel_1d(d: RelativeDensity) -> SteinKernel1D:
    return SteinKernel1D(d)


def stein_discrepancy(d: RelativeDensity, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """``S(mu | gamma) = (E|tau(X) - Id|^2)^{1/2}``.

    In dimension one the kernel comes from :class:`SteinKernel1D`; in higher
    dimension only centered Gaussians (``tau = Sigma``) are supported.
    """
    if d.dim == 1:
        tau = SteinKernel1D(d)

        def g(x):
            v = (tau(x[:, 0]) - 1.0) ** 2
            return np.where(np.isfinite(v), v, 0.0)

        s2 = d.expect(g, cfg)
        s2v, s2e = max(float(s2.value), 0.0), float(s2.error)
    else:
        if not (d.is_mixture and d.backing.n_components == 1):
            raise UnsupportedFamilyError("Stein discrepancy in dimension >= 2 needs a Gaussian")
        if not _centered(d):
            raise PreconditionError("Stein discrepancy requires a centered density")
        dev = d.backing.covs[0] - np.eye(d.dim)
        s2v, s2e = float(np.sum(dev * dev)), 0.0
    s = math.sqrt(s2v)
    err = s2e / (2.0 * s) if s > 0 else math.sqrt(s2e)
    return Estimate(s, err)


def stein_discrepancy_available(d: RelativeDensity) -> bool:
    if not _centered(d):
        return False
    return d.dim == 1 or (d.is_mixture and d.backing.n_components == 1)


# --------------------------------------------------------------------------
# test functions


def _norm_hermite(k: int, x: np.ndarray) -> np.ndarray:
    c = np.zeros(k + 1)
    c[k] = 1.0 / math.sqrt(math.factorial(k))
    return hermeval(x, c)


def _hermite_batch(indices, x):
    """Values ``(N, M)`` and gradients ``(N, M, n)`` of normalized tensor Hermites."""
    x = np.asarray(x, dtype=float)
    n = x.shape[1]
    kmax = max(max(ix) for ix in indices)
    # table[k][:, i] = He_k(x_i) / sqrt(k!)
    table = [_norm_hermite(k, x) for k in range(kmax + 1)]
    vals = np.empty((x.shape[0], len(indices)))
    grads = np.empty((x.shape[0], len(indices), n))
    for m, ix in enumerate(indices):
        factors = np.column_stack([table[k][:, i] for i, k in enumerate(ix)])
        vals[:, m] = np.prod(factors, axis=1)
        for i, k in enumerate(ix):
            # d/dx He_k / sqrt(k!) = sqrt(k) He_{k-1} / sqrt((k-1)!)
            dfi = math.sqrt(k) * table[k - 1][:, i] if k > 0 else np.zeros(x.shape[0])
            others = np.prod(np.delete(factors, i, axis=1), axis=1) if n > 1 else 1.0
            grads[:, m, i] = dfi * others
    return vals, grads


def _fourier_batch(freqs, parts, x):
    arg = x @ freqs.T
    c, s = np.cos(arg), np.sin(arg)
    is_cos = np.asarray(parts) == "cos"
    vals = np.where(is_cos, c, s)
    dvals = np.where(is_cos, -s, c)
    return vals, dvals[:, :, None] * freqs[None, :, :]


def _fourier_resolvent_batch(freqs, parts, eps, x):
    """``R_eps`` applied to ``cos`` / ``sin`` of ``freq.x``.

    With ``u = e^{-t}``, ``R_eps e^{i w.x} = 4 e^{-|w|^2/2}
    int_0^{eps^{1/4}} u^3 e^{|w|^2 u^2 / 2} e^{i u w.x} du``; the ``u``
    integral uses a 64-point Gauss-Legendre rule.
    """
    u, wu = gauss_legendre(0.0, eps ** 0.25, _GL_ORDER)
    w2 = np.sum(freqs * freqs, axis=1)
    # (U, M) weights 4 u^3 exp(-|w|^2 (1 - u^2) / 2)
    kern = 4.0 * (wu * u ** 3)[:, None] * np.exp(-0.5 * w2[None, :] * (1.0 - u[:, None] ** 2))
    arg = x @ freqs.T
    is_cos = np.asarray(parts) == "cos"
    vals = np.zeros(arg.shape)
    dfac = np.zeros(arg.shape)
    for ui, ku in zip(u, kern):
        c, s = np.cos(ui * arg), np.sin(ui * arg)
        vals += ku * np.where(is_cos, c, s)
        dfac += ku * ui * np.where(is_cos, -s, c)
    return vals, dfac[:, :, None] * freqs[None, :, :]


@dataclass(frozen=True)
class Sinusoid:
    """Class-B member ``amplitude * sin(freq.x + phase)``."""

    freq: tuple
    phase: float = 0.0
    amplitude: float | None = None
    kind: str = field(default="class-B sinusoid", init=False)

    def __post_init__(self):
        lam = float(np.linalg.norm(self.freq))
        if self.amplitude is None:
            object.__setattr__(self, "amplitude", 1.0 / max(1.0, lam, lam * lam))

    @property
    def _w(self):
        return np.asarray(self.freq, dtype=float)

    def sup_norms(self) -> tuple[float, float, float]:
        """Certified bounds on ``sup|phi|``, ``sup|grad phi|``, ``sup|Hess phi|``."""
        lam = float(np.linalg.norm(self._w))
        c = abs(self.amplitude)
        return c, c * lam, c * lam * lam

    def admissible(self) -> bool:
        return all(v <= 1.0 + 1e-15 for v in self.sup_norms())

    def value(self, x):
        x = _as_points(x, len(self.freq))
        return self.amplitude * np.sin(x @ self._w + self.phase)

    def grad(self, x):
        x = _as_points(x, len(self.freq))
        return self.amplitude * np.cos(x @ self._w + self.phase)[:, None] * self._w[None, :]

    def generator(self, x):
        """``L phi = Laplacian phi - x . grad phi``."""
        x = _as_points(x, len(self.freq))
        arg = x @ self._w + self.phase
        w2 = float(self._w @ self._w)
        return -self.amplitude * (w2 * np.sin(arg) + (x @ self._w) * np.cos(arg))

    def describe(self) -> dict:
        return {"kind": self.kind, "freq": list(map(float, self.freq)),
                "phase": float(self.phase), "amplitude": float(self.amplitude)}


@dataclass(frozen=True)
class Hermite:
    """``coef * prod_i He_{k_i}(x_i) / sqrt(k_i!)``; an eigenfunction of ``L`` with eigenvalue ``-sum k_i``."""

    index: tuple
    coef: float = 1.0
    kind: str = field(default="Hermite", init=False)

    @property
    def degree(self) -> int:
        return int(sum(self.index))

    def value(self, x):
        x = _as_points(x, len(self.index))
        return self.coef * _hermite_batch([self.index], x)[0][:, 0]

    def grad(self, x):
        x = _as_points(x, len(self.index))
        return self.coef * _hermite_batch([self.index], x)[1][:, 0, :]

    def describe(self) -> dict:
        return {"kind": self.kind, "index": list(self.index), "coef": float(self.coef)}


@dataclass(frozen=True)
class FourierMode:
    """``coef * cos(freq.x)`` or ``coef * sin(freq.x)``."""

    freq: tuple
    part: str = "cos"
    coef: float = 1.0
    kind: str = field(default="Fourier", init=False)

    def __post_init__(self):
        if self.part not in ("cos", "sin"):
            raise ValueError("part must be 'cos' or 'sin'")

    def value(self, x):
        x = _as_points(x, len(self.freq))
        return self.coef * _fourier_batch(np.atleast_2d(self.freq), [self.part], x)[0][:, 0]

    def grad(self, x):
        x = _as_points(x, len(self.freq))
        return self.coef * _fourier_batch(np.atleast_2d(self.freq), [self.part], x)[1][:, 0, :]

    def describe(self) -> dict:
        return {"kind": self.kind, "freq": list(map(float, self.freq)), "part": self.part,
                "coef": float(self.coef)}


@dataclass(frozen=True)
class FourierResolvent:
    """``R_eps`` applied to a :class:`FourierMode`."""

    mode: FourierMode
    eps: float = 1.0
    kind: str = field(default="Fourier-resolvent", init=False)

    def _batch(self, x):
        x = _as_points(x, len(self.mode.freq))
        return _fourier_resolvent_batch(np.atleast_2d(np.asarray(self.mode.freq, dtype=float)),
                                        [self.mode.part], self.eps, x)

    def value(self, x):
        return self.mode.coef * self._batch(x)[0][:, 0]

    def grad(self, x):
        return self.mode.coef * self._batch(x)[1][:, 0, :]

    def describe(self) -> dict:
        return {"kind": self.kind, "mode": self.mode.describe(), "eps": float(self.eps)}


TestFunction = Sinusoid | Hermite | FourierMode | FourierResolvent


def resolvent_factor(degree: int, eps: float = 1.0) -> float:
    """``4 int_s^inf e^{-(4+k)t} dt = (4 / (4 + k)) eps^{(4+k)/4}`` with ``e^{-4s} = eps``."""
    return 4.0 / (4.0 + degree) * eps ** ((4.0 + degree) / 4.0)


def resolvent(psi, eps: float = 1.0):
    """``R_eps psi = 4 int_s^inf e^{-4t} P_t psi dt`` with ``e^{-4s} = eps``."""
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    if isinstance(psi, Hermite):
        return Hermite(psi.index, psi.coef * resolvent_factor(psi.degree, eps))
    if isinstance(psi, FourierMode):
        return FourierResolvent(psi, eps)
    raise UnsupportedFamilyError(f"no resolvent for {getattr(psi, 'kind', type(psi).__name__)}")


def resolvent_time_quadrature(psi, x, eps: float = 1.0, order: int = 96) -> np.ndarray:
    """``4 int_s^inf e^{-4t} P_t psi(x) dt`` with ``P_t`` from the Mehler integral.

    Independent of the eigen-expansion and of the closed Fourier form: ``P_t``
    is applied by Gauss-Hermite in the Gaussian variable and the time axis is
    integrated adaptively.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    s = -0.25 * math.log(eps)
    out = []
    for xi in x:
        def integrand(t):
            return 4.0 * math.exp(-4.0 * t) * float(ou_apply(psi.value, t, xi[None, :], order)[0])
        val, _ = quad(integrand, s, math.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
        out.append(val)
    return np.array(out)


# --------------------------------------------------------------------------
# normalization of the resolvent class


def _normalization_grid(tgrid):
    if tgrid is None:
        u = np.linspace(0.0, 1.0, 101)[1:]
        ts = -np.log(u)
    else:
        ts = np.asarray(tgrid, dtype=float)
    return np.unique(np.concatenate([[0.0], ts[np.isfinite(ts)]]))


def _psi_batch(functions, x):
    """Values of a homogeneous list of Hermite or Fourier functions, shape ``(N, M)``."""
    if isinstance(functions[0], Hermite):
        v, _ = _hermite_batch([f.index for f in functions], x)
        return v * np.array([f.coef for f in functions])[None, :]
    freqs = np.array([f.freq for f in functions], dtype=float)
    v, _ = _fourier_batch(freqs, [f.part for f in functions], x)
    return v * np.array([f.coef for f in functions])[None, :]


def _mixture_cf(mix: GaussianMixture, v: np.ndarray):
    """``E e^{i v.X}`` of shape ``(M,)`` and ``E X e^{i v.X}`` of shape ``(M, n)``."""
    quad_form = np.einsum("mi,kij,mj->mk", v, mix.covs, v)
    phase = v @ mix.means.T
    terms = mix.weights[None, :] * np.exp(1j * phase - 0.5 * quad_form)
    # per component E X e^{ivX} = (m + i S v) E e^{ivX}
    shifted = mix.means[None, :, :] + 1j * np.einsum("kij,mj->mki", mix.covs, v)
    return terms.sum(axis=1), np.einsum("mk,mki->mi", terms, shifted)


def _normalization_profile(d, functions, tgrid, cfg):
    """``g_m(t) = int psi_m^2 P_t f d gamma`` on the grid plus the ``t = inf`` limit.

    Fourier modes use ``cos^2 = (1 + cos 2y) / 2`` and the closed-form
    characteristic function of the evolved mixture; Hermite functions use
    the mixture quadrature.
    """
    if not (isinstance(d, RelativeDensity) and d.is_mixture):
        raise UnsupportedFamilyError("normalization needs a Gaussian-mixture density")
    ts = _normalization_grid(tgrid)
    fourier = isinstance(functions[0], FourierMode)
    if fourier:
        freqs = 2.0 * np.array([f.freq for f in functions], dtype=float)
        sign = np.where(np.array([f.part for f in functions]) == "cos", 1.0, -1.0)
        coef2 = np.array([f.coef for f in functions]) ** 2
    rows = []
    limit_law = GaussianMixture.gaussian(np.zeros(d.dim), np.eye(d.dim))
    for law in [evolve(d, float(t)).evolved for t in ts] + [limit_law]:
        if fourier:
            cf, _ = _mixture_cf(law, freqs)
            rows.append(coef2 * 0.5 * (1.0 + sign * cf.real))
        else:
            rows.append(law.expect(lambda x: _psi_batch(functions, x) ** 2, cfg,
                                   with_error=False).value)
    return ts, np.vstack(rows)


def _fourier_resolvent_stein_vectors(mix: GaussianMixture, freqs, parts, eps):
    """``E[X phi - grad phi]`` for ``phi = R_eps cos / sin(freq.x)`` under a mixture.

    Uses the Gauss-Legendre representation of ``R_eps`` in ``u`` and the
    closed-form characteristic function per node.
    """
    u, wu = gauss_legendre(0.0, eps ** 0.25, _GL_ORDER)
    w2 = np.sum(freqs * freqs, axis=1)
    is_cos = (np.asarray(parts) == "cos")[:, None]
    out = np.zeros(freqs.shape)
    for ui, wi in zip(u, wu):
        kern = 4.0 * wi * ui ** 3 * np.exp(-0.5 * w2 * (1.0 - ui * ui))
        cf, cfx = _mixture_cf(mix, ui * freqs)
        cos_vec = cfx.real + ui * freqs * cf.imag[:, None]
        sin_vec = cfx.imag - ui * freqs * cf.real[:, None]
        out += kern[:, None] * np.where(is_cos, cos_vec, sin_vec)
    return out


def normalize_for_R(d: RelativeDensity, psi, tgrid=None,
                    cfg: QuadratureConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """Scale making ``psi`` admissible for the resolvent class.

    ``bound = 1.05 * max(g)`` over the time grid, ``t = 0`` and the
    ``t = inf`` limit ``int psi^2 d gamma``; returns ``(1 / sqrt(bound), bound)``.
    """
    _, prof = _normalization_profile(d, [psi], tgrid, cfg)
    bound = NORMALIZATION_SAFETY * float(prof[:, 0].max())
    return 1.0 / math.sqrt(bound), bound


# --------------------------------------------------------------------------
# lower bounds on the Stein functionals


@dataclass
class SteinFunctionalEstimate:
    """Certified lower bound on a Stein functional with its witness."""

    value: float
    witness: object
    family: str
    error: float = 0.0
    certificates: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "best_parameters": self.witness.describe() if self.witness is not None else None,
            "value": self.value,
            "error": self.error,
            "admissibility_certificates": self.certificates,
        }


def class_b_family(dim: int, frequencies: Sequence[float] = DEFAULT_FREQUENCIES,
                   n_angles: int = 8) -> list[Sinusoid]:
    fam = []
    for alpha in _directions(dim, n_angles):
        for lam in frequencies:
            for theta in (0.0, 0.5 * math.pi):
                fam.append(Sinusoid(tuple(float(v) for v in lam * alpha), theta))
    return fam


def _stein_vectors(d, phis_batch, cfg):
    """``E[X phi_m(X) - grad phi_m(X)]`` for all m, shape ``(M, n)`` with errors."""
    def g(x):
        v, gr = phis_batch(x)
        return x[:, None, :] * v[:, :, None] - gr
    est = d.expect(g, cfg)
    return np.asarray(est.value), np.asarray(est.error)


def d_lower_bound(d: RelativeDensity, family: Sequence[Sinusoid] | None = None,
                  cfg: QuadratureConfig = DEFAULT_CONFIG) -> SteinFunctionalEstimate:
    """Lower bound on ``D(mu, gamma)`` over class-B sinusoids.

    The default family is ``lam in {0.1, ..., 3.0}``, ``theta in {0, pi/2}``
    and 8 directions in dimension two (coordinate axes above).
    """
    family = class_b_family(d.dim) if family is None else list(family)
    if not family:
        return SteinFunctionalEstimate(0.0, None, "class-B sinusoids")
    bad = [phi for phi in family if not phi.admissible()]
    if bad:
        raise PreconditionError(f"inadmissible class-B witness {bad[0].describe()}")
    freqs = np.array([phi.freq for phi in family], dtype=float)
    phases = np.array([phi.phase for phi in family])
    amps = np.array([phi.amplitude for phi in family])

    def batch(x):
        arg = x @ freqs.T + phases[None, :]
        return amps * np.sin(arg), (amps * np.cos(arg))[:, :, None] * freqs[None, :, :]

    vec, err = _stein_vectors(d, batch, cfg)
    norms = np.linalg.norm(vec, axis=1)
    best = int(np.argmax(norms))
    witness = family[best]
    c0, c1, c2 = witness.sup_norms()
    return SteinFunctionalEstimate(
        float(norms[best]), witness, "class-B sinusoids", float(np.linalg.norm(err[best])),
        {"sup_phi": c0, "sup_grad": c1, "sup_hess": c2, "family_size": len(family)},
    )


def hermite_family(dim: int, max_degree: int = 6) -> list[Hermite]:
    if dim == 1:
        idx = [(k,) for k in range(max_degree + 1)]
    elif dim == 2:
        idx = [(i, k - i) for k in range(max_degree + 1) for i in range(k + 1)]
    else:
        idx = [tuple(k if j == i else 0 for j in range(dim))
               for i in range(dim) for k in range(1, max_degree + 1)]
        idx.insert(0, (0,) * dim)
    return [Hermite(ix) for ix in idx]


def fourier_family(dim: int, frequencies: Sequence[float] = FOURIER_FREQUENCIES,
                   n_angles: int = 8) -> list[FourierMode]:
    fam = []
    for alpha in _directions(dim, n_angles):
        for lam in frequencies:
            for part in ("cos", "sin"):
                fam.append(FourierMode(tuple(float(v) for v in lam * alpha), part))
    return fam


def dtilde_lower_bound(d: RelativeDensity, eps: float = 1.0, family: str | Sequence = "both",
                       tgrid=None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> SteinFunctionalEstimate:
    """Lower bound on ``D~_eps(mu, gamma)`` over normalized resolvents.

    Parameters
    ----------
    family : {"hermite", "fourier", "both"} or sequence of Hermite/FourierMode
        Base functions ``psi``; each is rescaled by :func:`normalize_for_R`
        before the resolvent is applied.
    """
    if not _centered(d):
        raise PreconditionError("D~ lower bound requires a centered density")
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    if isinstance(family, str):
        herm = hermite_family(d.dim) if family in ("hermite", "both") else []
        four = fourier_family(d.dim) if family in ("fourier", "both") else []
        label = family
    else:
        herm = [f for f in family if isinstance(f, Hermite)]
        four = [f for f in family if isinstance(f, FourierMode)]
        label = "custom"
    candidates, values, errors, bounds = [], [], [], []
    if herm:
        _, prof = _normalization_profile(d, herm, tgrid, cfg)
        bnd = NORMALIZATION_SAFETY * prof.max(axis=0)
        scales = 1.0 / np.sqrt(bnd)
        factors = np.array([resolvent_factor(h.degree, eps) for h in herm])
        coefs = scales * factors * np.array([h.coef for h in herm])
        idx = [h.index for h in herm]

        def hbatch(x):
            v, gr = _hermite_batch(idx, x)
            return v * coefs, gr * coefs[None, :, None]

        vec, err = _stein_vectors(d, hbatch, cfg)
        for h, s, b, v, e in zip(herm, scales, bnd, vec, err):
            candidates.append(resolvent(Hermite(h.index, h.coef * s), eps))
            values.append(np.linalg.norm(v))
            errors.append(np.linalg.norm(e))
            bounds.append(b)
    if four:
        _, prof = _normalization_profile(d, four, tgrid, cfg)
        bnd = NORMALIZATION_SAFETY * prof.max(axis=0)
        scales = 1.0 / np.sqrt(bnd)
        coefs = scales * np.array([f.coef for f in four])
        freqs = np.array([f.freq for f in four], dtype=float)
        vec = coefs[:, None] * _fourier_resolvent_stein_vectors(
            d.backing, freqs, [f.part for f in four], eps)
        err = np.zeros_like(vec)
        for f, s, b, v, e in zip(four, scales, bnd, vec, err):
            candidates.append(FourierResolvent(FourierMode(f.freq, f.part, f.coef * s), eps))
            values.append(np.linalg.norm(v))
            errors.append(np.linalg.norm(e))
            bounds.append(b)
    if not candidates:
        return SteinFunctionalEstimate(0.0, None, f"resolvents({label})")
    best = int(np.argmax(values))
    return SteinFunctionalEstimate(
        float(values[best]), candidates[best], f"resolvents({label})", float(errors[best]),
        {"normalization_bound": float(bounds[best]), "safety_factor": NORMALIZATION_SAFETY,
         "scaled_sup_over_grid": 1.0 / NORMALIZATION_SAFETY,
         "grid_points": int(len(_normalization_grid(tgrid)) + 1), "eps": float(eps),
         "family_size": len(candidates)},
    )


def resolvent_key_estimate_check(d: RelativeDensity, phi: Sinusoid, tgrid,
                                 cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Rows ``(t, int (L phi - 4 phi)^2 P_t f d gamma)``, checked against ``64 (1 + I(f))``."""
    if not phi.admissible():
        raise PreconditionError("phi must satisfy the class-B sup-norm constraints")
    bound = 64.0 * (1.0 + fisher(d, cfg).value)
    rows = []
    for t in tgrid:
        ev = evolve(d, float(t)).evolved

        def g(x):
            r = phi.generator(x) - 4.0 * phi.value(x)
            return r * r

        val = float(ev.expect(g, cfg).value)
        if val > bound * (1.0 + 1e-12):
            raise InequalityViolationError(
                f"int (L phi - 4 phi)^2 P_t f = {val!r} exceeds 64(1 + I) = {bound!r} at t = {t}")
        rows.append((float(t), val))
    return rows
