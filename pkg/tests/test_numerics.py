import math

import numpy as np
import pytest

from lsdeficit.errors import ToleranceExceededError
from lsdeficit.numerics import (QuadratureConfig, TimeQuadrature, gauss_hermite, gauss_legendre,
                                integrate_gamma, integrate_time_axis, mixture_expect)


def test_gauss_hermite_normalized():
    x, w = gauss_hermite(32)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.dot(w, x) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("g, expected", [
    (lambda x: np.ones(len(x)), 1.0),
    (lambda x: x[:, 0] ** 2, 1.0),
    (lambda x: x[:, 0] ** 4, 3.0),
    (lambda x: np.cos(x[:, 0]), math.exp(-0.5)),
])
def test_integrate_gamma_1d(g, expected):
    est = integrate_gamma(g)
    assert est.value == pytest.approx(expected, abs=1e-12)
    assert est.error < 1e-12


def test_integrate_gamma_2d_product():
    est = integrate_gamma(lambda x: x[:, 0] ** 2 * x[:, 1] ** 4, dim=2)
    assert est.value == pytest.approx(3.0, abs=1e-12)


def test_integrate_gamma_3d_monte_carlo():
    cfg = QuadratureConfig(mc_samples=200_000, seed=1)
    est = integrate_gamma(lambda x: np.sum(x * x, axis=1), dim=3, cfg=cfg)
    assert abs(est.value - 3.0) < est.error
    again = integrate_gamma(lambda x: np.sum(x * x, axis=1), dim=3, cfg=cfg)
    assert again.value == est.value


def test_mixture_expect_vector_valued():
    w = np.array([0.3, 0.7])
    m = np.array([[-1.0], [2.0]])
    ch = np.array([[[0.5]], [[1.5]]])
    est = mixture_expect(w, m, ch, lambda x: np.column_stack([x[:, 0], x[:, 0] ** 2]))
    mean = 0.3 * -1 + 0.7 * 2
    second = 0.3 * (1 + 0.25) + 0.7 * (4 + 2.25)
    assert est.value == pytest.approx([mean, second], abs=1e-12)


def test_gauss_legendre_interval():
    x, w = gauss_legendre(0.0, 2.0, 10)
    assert np.dot(w, x ** 3) == pytest.approx(4.0, abs=1e-13)


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(gh_order=4)
    with pytest.raises(ValueError):
        QuadratureConfig(tol=0.5)
    with pytest.raises(ValueError):
        QuadratureConfig(time_split=3.0, time_max=2.0)
    with pytest.raises(ValueError):
        TimeQuadrature(t_split=0.0)


def test_time_axis_exponential():
    est = integrate_time_axis(lambda t: math.exp(-2 * t), None, TimeQuadrature(), decay_rate=2.0)
    assert est.value == pytest.approx(0.5, abs=1e-10)
    assert est.error >= math.exp(-24) / 2 * 0.99


def test_time_axis_reports_failure():
    def nasty(t):
        return math.sin(1e4 * t) * 1e6

    with pytest.raises(ToleranceExceededError) as info:
        integrate_time_axis(nasty, None, TimeQuadrature(tol=1e-9))
    assert math.isfinite(info.value.value)
