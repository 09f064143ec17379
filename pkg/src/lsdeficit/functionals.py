"""Entropy, Fisher information, the log-Sobolev deficit and flow diagnostics.

For ``mu = f gamma``::

    H(f) = int f log f d gamma       I(f) = int |grad f|^2 / f d gamma
    delta(f) = I(f) / 2 - H(f) >= 0

The deficit is also computed through the conditional-covariance identity
``delta(f) = int_0^inf E|Z_t - (1 - e^{-2t}) Id|^2 / (16 sinh(t)^4) dt``
with ``Z_t = Cov(X | X_t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import RelativeDensity
from .errors import InequalityViolationError, PreconditionError
from .numerics import (DEFAULT_CONFIG, Estimate, QuadratureConfig, TimeQuadrature,
                       integrate_time_axis)
from .ou import PosteriorState, evolve


@dataclass(frozen=True)
class FunctionalReport:
    H: float
    I: float
    deficit: float
    error_budget: dict = field(default_factory=dict)


def _centered_or_raise(d: RelativeDensity, what: str):
    scale = max(1.0, math.sqrt(d.second_moment))
    if np.linalg.norm(d.barycenter) > 1e-10 * scale:
        raise PreconditionError(f"{what} requires a centered density (barycenter 0)")


def _entropy_integrand(d):
    def g(x):
        lf = d.log_value(x)
        return np.where(np.isfinite(lf), lf, 0.0)
    return g


def _fisher_integrand(d):
    def g(x):
        _, gl, _ = d.log_derivatives(x)
        sq = np.sum(gl * gl, axis=1)
        return np.where(np.isfinite(sq), sq, 0.0)
    return g


def entropy(d: RelativeDensity, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """Relative entropy ``H(f) = E_mu log f(X)`` in nats.

    ``log f`` is evaluated directly in log-mixture form, never as the log of
    an exponentiated value.
    """
    est = d.expect(_entropy_integrand(d), cfg)
    return Estimate(float(est.value), float(est.error))


def fisher(d: RelativeDensity, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """Relative Fisher information ``I(f) = E_mu |grad log f(X)|^2``."""
    est = d.expect(_fisher_integrand(d), cfg)
    return Estimate(float(est.value), float(est.error))


def deficit(d: RelativeDensity, cfg: QuadratureConfig = DEFAULT_CONFIG) -> FunctionalReport:
    h = entropy(d, cfg)
    i = fisher(d, cfg)
    return FunctionalReport(
        H=h.value, I=i.value, deficit=0.5 * i.value - h.value,
        error_budget={"H": h.error, "I": i.error, "deficit": 0.5 * i.error + h.error},
    )


def entropy_at(d, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG, with_error: bool = True) -> Estimate:
    """``H(P_t f)``."""
    e = evolve(d, t).density
    est = e.expect(_entropy_integrand(e), cfg, with_error)
    return Estimate(float(est.value), float(est.error))


def fisher_at(d, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG, with_error: bool = True) -> Estimate:
    """``I(P_t f)``."""
    e = evolve(d, t).density
    est = e.expect(_fisher_integrand(e), cfg, with_error)
    return Estimate(float(est.value), float(est.error))


def hessian_integrand(d, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG,
                      with_error: bool = True) -> Estimate:
    """``int P_t f |Hess log P_t f|^2 d gamma`` (Hilbert-Schmidt norm)."""
    e = evolve(d, t).density

    def g(x):
        _, _, hl = e.log_derivatives(x)
        return np.sum(hl * hl, axis=(1, 2))

    est = e.expect(g, cfg, with_error)
    return Estimate(float(est.value), float(est.error))


def covariance_excess(d, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG,
                      with_error: bool = True) -> Estimate:
    """``E |Z_t - (1 - e^{-2t}) Id|^2`` for ``t > 0``."""
    post = PosteriorState(d, t)
    eye = np.eye(post.base.dim)

    def g(x):
        dz = post.cov(x) - post.v * eye[None]
        return np.sum(dz * dz, axis=(1, 2))

    est = post.expect(g, cfg, with_error)
    return Estimate(float(est.value), float(est.error))


def mmse_integrand(d, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG,
                   with_error: bool = True) -> Estimate:
    """``E |Z_t - (1 - e^{-2t}) Id|^2 / (16 sinh(t)^4)``."""
    est = covariance_excess(d, t, cfg, with_error)
    den = 16.0 * math.sinh(t) ** 4
    return Estimate(est.value / den, est.error / den)


def deficit_integrand(d, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Integrand of the deficit identity at ``t``, in the numerically stable form."""
    if t <= cfg.time_split:
        return hessian_integrand(d, t, cfg, with_error=False).value
    return mmse_integrand(d, t, cfg, with_error=False).value


def deficit_time_integral(d, tq: TimeQuadrature | None = None,
                          cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """Integrate the deficit identity over t in [0, inf).

    ``[0, t_split]`` uses the Hessian form (no 0/0 at t = 0); ``[t_split,
    t_max]`` the conditional-covariance form in ``s = e^{-2t}``; the tail is
    bounded by ``integrand(t_max) / 4`` and booked as error only. Integrands
    are evaluated at the doubled spatial order; the order-doubling difference,
    integrated over time, enters the error.
    """
    tq = cfg.time_quadrature if tq is None else tq
    return integrate_time_axis(lambda t: hessian_integrand(d, t, cfg),
                               lambda t: mmse_integrand(d, t, cfg),
                               tq, decay_rate=4.0)


def deficit_via_mmse(d, tq: TimeQuadrature | None = None,
                     cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """Deficit from the conditional-covariance representation."""
    return deficit_time_integral(d, tq, cfg)


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    discrepancy: float
    error: float


def debruijn_check(d, tq: TimeQuadrature | None = None,
                   cfg: QuadratureConfig = DEFAULT_CONFIG) -> IdentityCheck:
    """Compare ``H(f)`` with ``int_0^inf I(P_t f) dt``."""
    tq = cfg.time_quadrature if tq is None else tq
    h = entropy(d, cfg)
    rhs = integrate_time_axis(lambda t: fisher_at(d, t, cfg), None, tq, decay_rate=2.0)
    return IdentityCheck(h.value, rhs.value, abs(h.value - rhs.value), h.error + rhs.error)


def fisher_decay_check(d, ts, cfg: QuadratureConfig = DEFAULT_CONFIG, tol: float = 1e-10):
    """Rows ``(t, I(P_t f), e^{-2t} I(f))``; raises if decay fails beyond ``tol``."""
    i0 = fisher(d, cfg).value
    rows = []
    for t in ts:
        if t < 0:
            raise ValueError("times must be nonnegative")
        it = fisher_at(d, t, cfg).value
        bound = math.exp(-2.0 * t) * i0
        if it > bound + tol:
            raise InequalityViolationError(
                f"I(P_t f) = {it!r} exceeds exp(-2t) I(f) = {bound!r} at t = {t}")
        rows.append((float(t), it, bound))
    return rows


def fisher_ode_check(d, t: float, h: float = 1e-4, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Return ``(dI/dt by central difference, -2 int P_t f Gamma_2(log P_t f) d gamma)``."""
    fd = (fisher_at(d, t + h, cfg).value - fisher_at(d, t - h, cfg).value) / (2.0 * h)
    rhs = -2.0 * hessian_integrand(d, t, cfg).value - 2.0 * fisher_at(d, t, cfg).value
    return fd, rhs


def conditional_mean_gram(d, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """``M_t = E[u(X_t) u(X_t)^T]`` with ``u(x) = E(X | X_t = x)``."""
    post = PosteriorState(d, t)

    def g(x):
        u = post.mean(x)
        return np.einsum("ni,nj->nij", u, u)

    return post.expect(g, cfg)


def rho(d, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """``rho(t) = sup_{|alpha|=1} E[(E(alpha.X | X_t))^2]``, the top eigenvalue of ``M_t``."""
    if isinstance(d, RelativeDensity):
        _centered_or_raise(d, "rho")
    m = conditional_mean_gram(d, t, cfg)
    mat = 0.5 * (m.value + m.value.T)
    return Estimate(float(np.linalg.eigvalsh(mat)[-1]), float(np.max(m.error)) * mat.shape[0])


def scaled_fisher_limit_check(d, ts, cfg: QuadratureConfig = DEFAULT_CONFIG, tol: float = 1e-10):
    """Rows ``(t, e^{2t} I(P_t f))`` for a centered density.

    The sequence is nonincreasing in ``t`` (its derivative is
    ``-2 e^{2t} int P_t f |Hess log P_t f|^2 d gamma``); a rise beyond ``tol``
    past ``t = 1`` raises :class:`InequalityViolationError`.
    """
    _centered_or_raise(d, "scaled_fisher_limit_check")
    rows = [(float(t), math.exp(2.0 * t) * fisher_at(d, t, cfg).value) for t in ts]
    tail = [r for r in rows if r[0] >= 1.0]
    for (t0, v0), (t1, v1) in zip(tail, tail[1:]):
        if t1 > t0 and v1 > v0 + tol * max(1.0, v0):
            raise InequalityViolationError(
                f"e^(2t) I(P_t f) increased from {v0!r} (t={t0}) to {v1!r} (t={t1})")
    return rows


def fisher_square_integral(d, tq: TimeQuadrature | None = None,
                           cfg: QuadratureConfig = DEFAULT_CONFIG) -> Estimate:
    """``int_0^inf I(P_t f)^2 dt``."""
    tq = cfg.time_quadrature if tq is None else tq
    def integrand(t):
        i = fisher_at(d, t, cfg)
        return Estimate(i.value ** 2, 2.0 * abs(i.value) * i.error + i.error ** 2)

    return integrate_time_axis(integrand, None, tq, decay_rate=4.0)
