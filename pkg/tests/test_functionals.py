import math

import numpy as np
import pytest

from lsdeficit.density import RelativeDensity, Tabulated1D, gaussian, mixture, standard_gaussian
from lsdeficit.errors import PreconditionError
from lsdeficit.functionals import (covariance_excess, debruijn_check, deficit,
                                   deficit_time_integral, deficit_via_mmse, entropy, fisher,
                                   fisher_decay_check, fisher_ode_check, hessian_integrand,
                                   mmse_integrand, rho, scaled_fisher_limit_check)
from lsdeficit.numerics import QuadratureConfig
import oracles

T_THIRD = 0.5 * math.log(3.0)


@pytest.mark.parametrize("m, cov", [
    ([0.0], [[4.0]]),
    ([0.0], [[0.5]]),
    ([1.0], [[1.0]]),
    ([0.5], [[2.0]]),
    ([0.0, 0.0], np.diag([2.0, 0.5])),
    ([0.3, -0.2], [[1.2, 0.4], [0.4, 0.8]]),
])
def test_gaussian_closed_forms(m, cov):
    d = gaussian(m, cov)
    assert entropy(d).value == pytest.approx(oracles.gaussian_entropy(m, cov), abs=1e-12)
    assert fisher(d).value == pytest.approx(oracles.gaussian_fisher(m, cov), abs=1e-12)


def test_closed_form_point_values():
    rep = deficit(gaussian([0.0], [[4.0]]))
    assert rep.H == pytest.approx(0.806853, abs=1e-6)
    assert rep.I == pytest.approx(2.25, abs=1e-12)
    assert rep.deficit == pytest.approx(0.318147, abs=1e-6)
    assert deficit(gaussian([0.0], [[0.5]])).deficit == pytest.approx(0.153426, abs=1e-6)


def test_mixture_against_adaptive_quadrature():
    w, m, v = [0.5, 0.3, 0.2], [-1.0, 0.5, 2.0], [0.5, 1.0, 0.3]
    d = mixture(w, [[x] for x in m], [[[x]] for x in v])
    assert entropy(d).value == pytest.approx(oracles.entropy_1d(w, m, v), abs=1e-9)
    assert fisher(d).value == pytest.approx(oracles.fisher_1d(w, m, v), abs=1e-8)


def test_2d_mixture_against_grid():
    w = [0.5, 0.5]
    m = [[-1.0, 0.0], [1.0, 0.5]]
    c = [0.8 * np.eye(2), np.array([[1.0, 0.3], [0.3, 0.7]])]
    d = mixture(w, m, c)
    ref = oracles.grid_expect_2d(
        w, m, c, lambda x, p: np.log(p) + 0.5 * np.sum(x * x, axis=1) + math.log(2 * math.pi))
    assert entropy(d).value == pytest.approx(ref, abs=1e-9)


def test_monte_carlo_path_in_three_dimensions():
    cov = np.diag([2.0, 0.5, 1.5])
    d = gaussian(np.zeros(3), cov)
    cfg = QuadratureConfig(mc_samples=200_000, seed=7)
    h = entropy(d, cfg)
    assert abs(h.value - oracles.gaussian_entropy(np.zeros(3), cov)) < h.error
    assert fisher(d, cfg).value == pytest.approx(oracles.gaussian_fisher(np.zeros(3), cov), rel=0.02)


def test_tabulated_density_functionals():
    from scipy.stats import norm

    grid = np.linspace(-12, 12, 6001)
    vals = norm.pdf(grid, 0.0, math.sqrt(0.5))
    vals[0] = vals[-1] = 0.0
    d = RelativeDensity(Tabulated1D(grid, vals))
    assert entropy(d).value == pytest.approx(0.5 * (0.5 - 1 - math.log(0.5)), abs=1e-8)
    assert fisher(d).value == pytest.approx(0.5, abs=1e-8)


def test_integrand_point_value():
    d = gaussian([0.0], [[4.0]])
    assert mmse_integrand(d, T_THIRD).value == pytest.approx(0.25, rel=1e-12)
    assert covariance_excess(d, T_THIRD).value == pytest.approx(4 / 9, rel=1e-12)


def test_standard_gaussian_integral_is_zero():
    est = deficit_time_integral(standard_gaussian(1))
    assert abs(est.value) < 1e-25
    assert est.error < 1e-25


def test_deficit_time_integral_closed_form():
    est = deficit_via_mmse(gaussian([0.0], [[4.0]]))
    assert est.value == pytest.approx(0.318147, rel=1e-4)
    assert est.value == pytest.approx(2.25 / 2 - (1.5 - math.log(2)), rel=1e-9)


def test_split_point_forms_agree(corpus_densities):
    for d in corpus_densities.values():
        near = hessian_integrand(d, 0.05).value
        far = mmse_integrand(d, 0.05).value
        assert near == pytest.approx(far, rel=1e-6, abs=1e-12)


def test_refinement_within_reported_error():
    d = mixture([0.5, 0.3, 0.2], [[-1.0], [0.5], [2.0]], [[[0.5]], [[1.0]], [[0.3]]])
    cfg = QuadratureConfig()
    lo = deficit_time_integral(d, cfg=cfg)
    hi = deficit_time_integral(d, cfg=cfg.doubled())
    assert abs(hi.value - lo.value) <= lo.error


def test_debruijn_identity():
    chk = debruijn_check(mixture([0.5, 0.5], [[-1.0], [1.0]], [[[1.0]], [[1.0]]]))
    assert chk.discrepancy < 1e-6


def test_fisher_decay_rows():
    rows = fisher_decay_check(gaussian([0.0], [[4.0]]), [0.0, 0.5, T_THIRD, 3.0])
    assert rows[2][1] == pytest.approx(0.5, rel=1e-12)
    assert all(it <= bound + 1e-12 for _, it, bound in rows)


def test_fisher_ode():
    fd, rhs = fisher_ode_check(gaussian([0.0], [[4.0]]), 0.5)
    assert fd == pytest.approx(rhs, rel=1e-6)


def test_rho_closed_form_and_precondition():
    assert rho(gaussian([0.0], [[4.0]]), T_THIRD).value == pytest.approx(8 / 3, rel=1e-12)
    with pytest.raises(PreconditionError):
        rho(gaussian([0.5], [[2.0]]), 1.0)


def test_scaled_fisher_nonincreasing():
    rows = scaled_fisher_limit_check(gaussian([0.0], [[4.0]]), [0.5, 1, 2, 4, 8])
    vals = [v for _, v in rows]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
