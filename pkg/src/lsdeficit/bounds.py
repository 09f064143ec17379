"""Catalog of deficit lower bounds and related inequalities, checked numerically.

Each check evaluates both sides of an inequality ``lhs >= rhs`` on a density
and reports the slack ``lhs - rhs`` with an error budget. Suprema such as
``D`` and ``D~_eps`` enter through certified lower bounds, which can only
shrink a right-hand side, so every check remains a true necessary condition.

``||A||`` denotes ``sup_{|alpha| = 1} A alpha . alpha``, the largest
eigenvalue of the symmetrized matrix; it is negative when ``A < 0``.
"""

from __future__ import annotations

import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .density import RelativeDensity, recenter
from .errors import PreconditionError, UnsupportedFamilyError
from .functionals import deficit, fisher, fisher_square_integral, rho
from .numerics import DEFAULT_CONFIG, QuadratureConfig
from .stein import (d_lower_bound, dtilde_lower_bound, stein_discrepancy,
                    stein_discrepancy_available)
from .transport import w2, w2_available

PASS, FAIL, SKIP = "pass", "fail", "precondition-not-met"
COV_EPS_VALUES = (0.1, 0.5, 1.0)
T0_GRID = tuple(0.25 * k for k in range(41))


@dataclass
class SlackReport:
    """Outcome of one check: ``slack = lhs - rhs``, failing only below ``-error_budget``."""

    check: str
    lhs: float
    rhs: float
    slack: float
    error_budget: float
    verdict: str
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def theta(r: float) -> float:
    """``theta(r) = r - log(1 + r)`` for ``r > -1``."""
    if r <= -1.0:
        raise ValueError("theta requires r > -1")
    return r - math.log1p(r)


def top_eigenvalue(a) -> float:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    return float(np.linalg.eigvalsh(0.5 * (a + a.T))[-1])


def _propagate(fn, values, errors) -> float:
    """First-order error of ``fn(*values)`` from one-sided bumps of each argument."""
    base = fn(*values)
    total = 0.0
    for i, e in enumerate(errors):
        if not e or not math.isfinite(e):
            continue
        bumped = list(values)
        bumped[i] = bumped[i] + e
        try:
            total += abs(fn(*bumped) - base)
        except (ValueError, ZeroDivisionError):
            return math.inf
    return total


class Quantities:
    """Lazily computed, shared inputs of the checks for one density."""

    def __init__(self, d: RelativeDensity, cfg: QuadratureConfig = DEFAULT_CONFIG):
        self.d = d
        self.cfg = cfg
        self.n = d.dim
        self._lock = threading.Lock()
        self._dtilde = {}

    @cached_property
    def functionals(self):
        return deficit(self.d, self.cfg)

    @property
    def floor(self) -> float:
        return 10.0 * self.cfg.tol

    @cached_property
    def gamma_minus_id(self) -> float:
        return top_eigenvalue(self.d.covariance - np.eye(self.n))

    @cached_property
    def centered(self) -> bool:
        return bool(self.d.is_centered())

    @cached_property
    def recentered(self) -> RelativeDensity:
        return self.d if self.centered else recenter(self.d)

    @cached_property
    def fisher_recentered(self):
        return fisher(self.recentered, self.cfg)

    @cached_property
    def d_est(self):
        return d_lower_bound(self.recentered, cfg=self.cfg)

    @cached_property
    def d_est_self(self):
        return d_lower_bound(self.d, cfg=self.cfg)

    def dtilde(self, eps: float):
        with self._lock:
            if eps not in self._dtilde:
                self._dtilde[eps] = dtilde_lower_bound(self.recentered, eps, cfg=self.cfg)
            return self._dtilde[eps]

    @cached_property
    def stein(self):
        if not stein_discrepancy_available(self.d):
            return None
        return stein_discrepancy(self.d, self.cfg)

    @cached_property
    def w2(self):
        if not w2_available(self.d):
            return None
        return w2(self.d, self.cfg)

    @cached_property
    def fd_integral(self):
        return fisher_square_integral(self.d, cfg=self.cfg)

    @cached_property
    def rho_grid(self) -> list[tuple[float, float]]:
        rows = []
        for t in T0_GRID:
            if t == 0.0:
                rows.append((t, top_eigenvalue(self.d.covariance)))
            else:
                rows.append((t, rho(self.d, t, self.cfg).value))
        return rows


def _report(name, lhs, rhs, budget, q: Quantities, details=None) -> SlackReport:
    budget = budget + q.floor * max(1.0, abs(lhs), abs(rhs))
    slack = lhs - rhs
    verdict = FAIL if slack < -budget else PASS
    return SlackReport(name, float(lhs), float(rhs), float(slack), float(budget), verdict,
                       details or {})


def _skip(name, reason) -> SlackReport:
    nan = float("nan")
    return SlackReport(name, nan, nan, nan, nan, SKIP, {"reason": reason})


def _gamma_le_id(q: Quantities) -> bool:
    return q.gamma_minus_id <= 1e-10


def check_lsi(q: Quantities) -> SlackReport:
    f = q.functionals
    return _report("LSI", f.deficit, 0.0, f.error_budget["deficit"], q)


def check_thm1bis(q: Quantities) -> SlackReport:
    name = "THM1BIS"
    if not _gamma_le_id(q):
        return _skip(name, "covariance not <= Id")
    f = q.functionals
    est = q.dtilde(1.0)
    rhs = 0.25 * est.value ** 4
    budget = f.error_budget["deficit"] + _propagate(lambda v: 0.25 * v ** 4, [est.value], [est.error])
    return _report(name, f.deficit, rhs, budget, q, {"dtilde_est": est.value,
                                                     "witness": est.to_json()})


def check_thm1(q: Quantities) -> SlackReport:
    name = "THM1"
    if not _gamma_le_id(q):
        return _skip(name, "covariance not <= Id")
    f = q.functionals
    est, ib = q.d_est, q.fisher_recentered

    def rhs_fn(dv, i):
        return dv ** 4 / (64.0 * (1.0 + i) ** 2)

    rhs = rhs_fn(est.value, ib.value)
    budget = f.error_budget["deficit"] + _propagate(rhs_fn, [est.value, ib.value],
                                                    [est.error, ib.error])
    return _report(name, f.deficit, rhs, budget, q, {"d_est": est.value, "fisher_recentered": ib.value,
                                                     "witness": est.to_json()})


def check_cov_eps(q: Quantities, eps="adaptive") -> SlackReport:
    f = q.functionals
    norm_sq = q.gamma_minus_id ** 2
    ed = f.error_budget["deficit"]
    if eps == "adaptive":
        name = "COV_EPS(eps=adaptive)"
        if not f.deficit > ed + q.floor:
            return _skip(name, "deficit not positive beyond its error budget")
        e = 1.0 if norm_sq == 0.0 else min(1.0, f.deficit / norm_sq)
        lhs, lhs_err = 3.0 * f.deficit, 3.0 * ed
    else:
        e = float(eps)
        name = f"COV_EPS(eps={e:g})"
        if not 0.0 < e <= 1.0:
            raise ValueError("eps must lie in (0, 1]")
        lhs, lhs_err = 2.0 * f.deficit + e * norm_sq, 2.0 * ed
    est = q.dtilde(e)

    def rhs_fn(v):
        return v ** 4 / (4.0 * e ** 3)

    rhs = rhs_fn(est.value)
    budget = lhs_err + _propagate(rhs_fn, [est.value], [est.error])
    return _report(name, lhs, rhs, budget, q, {"eps": e, "gamma_minus_id_norm": q.gamma_minus_id,
                                               "dtilde_est": est.value, "witness": est.to_json()})


def _second_moment_le_n(q: Quantities) -> bool:
    return q.d.second_moment <= q.n * (1.0 + 1e-12)


def check_bgrs(q: Quantities) -> SlackReport:
    name = "BGRS"
    if not _second_moment_le_n(q):
        return _skip(name, "second moment exceeds the dimension")
    if q.w2 is None:
        return _skip(name, "W2 not available for this family")
    f, w = q.functionals, q.w2
    n = q.n
    rhs = w.value ** 4 / (4.0 * n)
    budget = f.error_budget["deficit"] + _propagate(lambda v: v ** 4 / (4.0 * n), [w.value], [w.error])
    return _report(name, f.deficit, rhs, budget, q, {"w2": w.value})


def check_fd(q: Quantities) -> SlackReport:
    name = "FD"
    if not _second_moment_le_n(q):
        return _skip(name, "second moment exceeds the dimension")
    if not q.d.is_mixture:
        return _skip(name, "flow requires a Gaussian mixture")
    f, fd = q.functionals, q.fd_integral
    return _report(name, f.deficit, fd.value / q.n, f.error_budget["deficit"] + fd.error / q.n, q,
                   {"fisher_square_integral": fd.value})


def _stein_ready(q: Quantities, name):
    if q.stein is None:
        return _skip(name, "Stein discrepancy not available (needs a centered 1-D law or Gaussian)")
    if q.stein.value <= 1e-12:
        return _skip(name, "Stein discrepancy vanishes")
    return None


def check_stein_w2(q: Quantities) -> SlackReport:
    name = "STEIN_W2"
    skip = _stein_ready(q, name)
    if skip:
        return skip
    if q.w2 is None:
        return _skip(name, "W2 not available for this family")
    f, s, w = q.functionals, q.stein, q.w2

    def rhs_fn(wv, sv):
        return wv ** 4 / (4.0 * sv * sv)

    rhs = rhs_fn(w.value, s.value)
    budget = f.error_budget["deficit"] + _propagate(rhs_fn, [w.value, s.value], [w.error, s.error])
    return _report(name, f.deficit, rhs, budget, q, {"w2": w.value, "stein_discrepancy": s.value})


def check_stein_w2_improved(q: Quantities) -> SlackReport:
    name = "STEIN_W2_IMPROVED"
    skip = _stein_ready(q, name)
    if skip:
        return skip
    if q.w2 is None:
        return _skip(name, "W2 not available for this family")
    f, s, w = q.functionals, q.stein, q.w2
    if w.value > s.value + 1e-9 + w.error + s.error:
        return _skip(name, "W2 exceeds the Stein discrepancy")

    def rhs_fn(wv, sv):
        return sv * sv * math.log(1.0 / math.cos(min(wv / sv, 1.0))) ** 2

    rhs = rhs_fn(w.value, s.value)
    budget = f.error_budget["deficit"] + _propagate(rhs_fn, [w.value, s.value], [w.error, s.error])
    return _report(name, f.deficit, rhs, budget, q, {"w2": w.value, "stein_discrepancy": s.value})


def check_hsi(q: Quantities) -> SlackReport:
    name = "HSI"
    skip = _stein_ready(q, name)
    if skip:
        return skip
    f, s = q.functionals, q.stein

    def lhs_fn(sv, i):
        return 0.5 * sv * sv * math.log1p(i / (sv * sv))

    lhs = lhs_fn(s.value, f.I)
    budget = f.error_budget["H"] + _propagate(lhs_fn, [s.value, f.I], [s.error, f.error_budget["I"]])
    return _report(name, lhs, f.H, budget, q, {"stein_discrepancy": s.value})


def check_dim_lsi(q: Quantities) -> SlackReport:
    name = "DIM_LSI"
    f, n = q.functionals, q.n
    lap = q.d.second_moment - n

    def lhs_fn(i, lp):
        return 0.5 * lp + 0.5 * n * math.log(1.0 + i / n - lp / n)

    arg = 1.0 + f.I / n - lap / n
    if arg <= 0.0:
        nan = float("nan")
        return SlackReport(name, nan, f.H, nan, 0.0, FAIL, {"reason": "log argument not positive",
                                                             "log_argument": arg})
    lhs = lhs_fn(f.I, lap)
    budget = f.error_budget["H"] + _propagate(lhs_fn, [f.I, lap], [f.error_budget["I"], 0.0])
    details = {"laplacian_integral": lap,
               "theta_form_rhs": 0.5 * n * theta((f.I - lap) / n)}
    return _report(name, lhs, f.H, budget, q, details)


def check_d_le_s(q: Quantities) -> SlackReport:
    name = "D_LE_S"
    if q.stein is None:
        return _skip(name, "Stein discrepancy not available (needs a centered 1-D law or Gaussian)")
    s, est = q.stein, q.d_est_self
    return _report(name, s.value, est.value, s.error + est.error, q,
                   {"d_est": est.value, "witness": est.to_json()})


def check_cov_from_deficit(q: Quantities) -> SlackReport:
    """``delta >= (e^{-4 t0} / 16) ||Gamma - Id||^2`` once the premise holds from ``t0`` on.

    The premise ``2 e^{-4t} + 2 max(rho, rho^2) <= ||Gamma - Id||^2 / 4`` is
    required at every grid point ``t >= t0`` of ``[0, 10]`` (step 0.25).
    """
    name = "COV_FROM_DEFICIT"
    if not q.centered:
        return _skip(name, "density not centered")
    if not q.d.is_mixture:
        return _skip(name, "rho(t) requires a Gaussian mixture")
    a2 = q.gamma_minus_id ** 2
    ok = [2.0 * math.exp(-4.0 * t) + 2.0 * max(r, r * r) <= 0.25 * a2 for t, r in q.rho_grid]
    t0 = None
    for i in range(len(ok) - 1, -1, -1):
        if not ok[i]:
            break
        t0 = q.rho_grid[i][0]
    if t0 is None:
        return _skip(name, "premise not met on the time grid")
    f = q.functionals
    rhs = math.exp(-4.0 * t0) / 16.0 * a2
    return _report(name, f.deficit, rhs, f.error_budget["deficit"], q,
                   {"t0": t0, "gamma_minus_id_norm": q.gamma_minus_id})


CATALOG = {
    "LSI": check_lsi,
    "THM1BIS": check_thm1bis,
    "THM1": check_thm1,
    "COV_EPS": check_cov_eps,
    "BGRS": check_bgrs,
    "FD": check_fd,
    "STEIN_W2": check_stein_w2,
    "STEIN_W2_IMPROVED": check_stein_w2_improved,
    "HSI": check_hsi,
    "DIM_LSI": check_dim_lsi,
    "D_LE_S": check_d_le_s,
    "COV_FROM_DEFICIT": check_cov_from_deficit,
}


def _suite():
    for name in CATALOG:
        if name == "COV_EPS":
            for eps in (*COV_EPS_VALUES, "adaptive"):
                yield name, {"eps": eps}
        else:
            yield name, {}


def verify(check: str, d: RelativeDensity, cfg: QuadratureConfig = DEFAULT_CONFIG,
           quantities: Quantities | None = None, **params) -> SlackReport:
    """Run one catalog check.

    Unsupported families and unmet preconditions yield a
    ``precondition-not-met`` verdict; numerical failures propagate.
    """
    if check not in CATALOG:
        raise KeyError(f"unknown check {check!r}; known: {', '.join(CATALOG)}")
    q = Quantities(d, cfg) if quantities is None else quantities
    try:
        return CATALOG[check](q, **params)
    except (UnsupportedFamilyError, PreconditionError) as exc:
        label = check if check != "COV_EPS" else f"COV_EPS(eps={params.get('eps', 'adaptive')})"
        return _skip(label, str(exc))


def verify_all(d: RelativeDensity, cfg: QuadratureConfig = DEFAULT_CONFIG,
               threads: int | None = None) -> list[SlackReport]:
    """Run every catalog entry; results come back in catalog order."""
    q = Quantities(d, cfg)
    jobs = list(_suite())
    workers = threads if threads else min(4, os.cpu_count() or 1)
    if workers <= 1:
        return [verify(name, d, cfg, q, **p) for name, p in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(verify, name, d, cfg, q, **p) for name, p in jobs]
        return [fut.result() for fut in futures]


def any_failed(reports) -> bool:
    return any(r.verdict == FAIL for r in reports)
