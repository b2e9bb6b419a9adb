import math

import numpy as np
import pytest
from scipy import special

from secrecykit.errors import AccuracyError
from secrecykit.quadrature import QuadratureConfig, integrate


def test_exponential():
    res = integrate(lambda x: np.exp(-x))
    assert res.value == pytest.approx(1.0, rel=1e-12)
    assert res.error <= 1e-8


def test_lower_limit():
    res = integrate(lambda x: np.exp(-x), lower=2.0)
    assert res.value == pytest.approx(math.exp(-2), rel=1e-12)


def test_algebraic_tail():
    # int_0^inf dx / (1 + x)^2 = 1
    res = integrate(lambda x: 1.0 / (1.0 + x) ** 2)
    assert res.value == pytest.approx(1.0, rel=1e-9)


def test_integrable_singularity_at_zero():
    # Gamma(0.3) from x^-0.7 e^-x
    res = integrate(lambda x: x ** -0.7 * np.exp(-x), breakpoints=4.0 ** np.arange(-12, 3), initial=1)
    assert res.value == pytest.approx(math.gamma(0.3), rel=1e-7)


def test_narrow_peak_found_with_breakpoints():
    f = lambda x: np.exp(-0.5 * ((x - 1e3) / 0.5) ** 2)
    res = integrate(f, breakpoints=[999.0, 1000.0, 1001.0])
    assert res.value == pytest.approx(math.sqrt(2 * math.pi) * 0.5, rel=1e-9)


def test_exponential_integral():
    # int_0^inf e^-x / (1 + x) dx = e E1(1)
    res = integrate(lambda x: np.exp(-x) / (1.0 + x))
    assert res.value == pytest.approx(math.e * special.exp1(1.0), rel=1e-10)


def test_counts_reported():
    res = integrate(lambda x: np.exp(-x))
    assert res.intervals >= 1
    assert res.evaluations % 15 == 0


def test_budget_exhaustion_carries_estimate():
    cfg = QuadratureConfig(rel_tol=1e-14, abs_tol=1e-300, max_subdivisions=3)
    with pytest.raises(AccuracyError) as info:
        integrate(lambda x: np.sin(20 * x) * np.exp(-x / 50), cfg=cfg)
    assert info.value.estimate is not None
    assert info.value.bound > 0


@pytest.mark.parametrize("kwargs", [dict(abs_tol=0.0), dict(rel_tol=-1.0),
                                    dict(max_subdivisions=0), dict(transform="tanh")])
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        QuadratureConfig(**kwargs)
