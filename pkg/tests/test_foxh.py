import math

import numpy as np
import pytest

from secrecykit.channels import ChannelSpec, Family, analytic_pdf, to_fox_h
from secrecykit.errors import AccuracyError, DivergenceError, PoleError, SpecError
from secrecykit.foxh import (ContourPlan, FoxHChannel, FoxHParams, fox_h, foxh_cdf, foxh_pdf,
                             foxh_sf, log_gamma_complex)

from _catalog import FAMILIES, spec

# 50-digit mpmath.loggamma values, frozen
LOGGAMMA_FIXTURE = [
    (1 + 1j, -0.65092319930185633889 - 0.30164032046753319789j),
    (0.3 - 2.5j, -3.1901582064283988131 + 0.5147052958740417364j),
    (-2.7 + 0.4j, -0.84963045007744143538 - 9.5102062715457042796j),
    (10 + 50j, -40.400262350482971022 + 159.62737280472833495j),
]

EXP_KERNEL = FoxHParams(m=1, n=0, b=(0.0,), B=(1.0,))


def test_log_gamma_trivial_values():
    assert abs(log_gamma_complex(1.0)) < 1e-15
    assert log_gamma_complex(0.5).real == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-14)


@pytest.mark.parametrize("z, ref", LOGGAMMA_FIXTURE)
def test_log_gamma_matches_reference(z, ref):
    assert abs(log_gamma_complex(z) - ref) <= 1e-13 * abs(ref)


def test_log_gamma_vectorised_and_conjugate():
    z = np.array([0.2 + 3j, 4 - 7j, -5.5 + 0.1j])
    out = log_gamma_complex(z)
    assert out.shape == (3,)
    np.testing.assert_allclose(log_gamma_complex(np.conj(z)), np.conj(out), rtol=1e-14)


@pytest.mark.parametrize("z", [0, -1, -7.0])
def test_log_gamma_pole(z):
    with pytest.raises(PoleError):
        log_gamma_complex(z)


def test_exponential_kernel():
    assert fox_h(EXP_KERNEL, 1.0) == pytest.approx(math.exp(-1), rel=1e-12)
    x = np.logspace(-3, 1.3, 30)
    np.testing.assert_allclose(fox_h(EXP_KERNEL, x), np.exp(-x), rtol=1e-10)


def test_gamma_kernel():
    # H^{1,0}_{0,1}[x | (m-1, 1)] = x^(m-1) e^-x
    m = 2.0
    h = fox_h(FoxHParams(m=1, n=0, b=(m - 1,), B=(1.0,)), 1.0)
    assert h == pytest.approx(math.exp(-1), rel=1e-12)
    nak = ChannelSpec.nakagami(2.0)
    p = to_fox_h(nak)
    assert p.K * fox_h(p, p.C * 1.0) == pytest.approx(analytic_pdf(nak, 1.0), rel=1e-12)


def test_fisher_f_kernel():
    s = ChannelSpec.fisher_f(2.0, 3.0, 1.0)
    p = to_fox_h(s)
    assert p.n == 1
    assert fox_h(p, p.C) == pytest.approx(analytic_pdf(s, 1.0) / p.K, rel=1e-8)


def test_full_output_error_estimate():
    val, err = fox_h(EXP_KERNEL, 2.0, full_output=True)
    assert val == pytest.approx(math.exp(-2), rel=1e-12)
    assert 0 <= err < 1e-10


def test_rayleigh_pdf_and_cdf():
    p = to_fox_h(ChannelSpec.rayleigh(1.0))
    assert foxh_pdf(p, 1.0) == pytest.approx(math.exp(-1), rel=1e-12)
    assert foxh_cdf(p, 1.0) == pytest.approx(1 - math.exp(-1), rel=1e-12)
    assert foxh_sf(p, 30.0) == pytest.approx(math.exp(-30), rel=1e-9)


@pytest.mark.parametrize("family", FAMILIES)
def test_cdf_vanishes_at_zero(family):
    p = to_fox_h(spec(family))
    assert foxh_cdf(p, 0.0) == 0.0
    assert foxh_cdf(p, 1e-12) < 1e-6


@pytest.mark.parametrize("family", [Family.KG, Family.EGK, Family.CASCADED_ALPHA_MU, Family.FISHER_F])
def test_cdf_derivative_is_pdf(family):
    p = to_fox_h(spec(family, 2.0))
    g = np.geomspace(0.05, 10.0, 20)
    h = 1e-4 * g
    deriv = (foxh_cdf(p, g + h) - foxh_cdf(p, g - h)) / (2 * h)
    assert np.max(np.abs(deriv - foxh_pdf(p, g))) < 1e-5


@pytest.mark.parametrize("family", FAMILIES)
def test_cdf_plus_sf_is_one(family):
    p = to_fox_h(spec(family, 0.7))
    g = np.geomspace(1e-3, 50, 25)
    np.testing.assert_allclose(foxh_cdf(p, g) + foxh_sf(p, g), 1.0, atol=1e-12)


def test_contour_shift_invariance():
    p = to_fox_h(ChannelSpec.kg(2.5, 4.0))
    x = 1.3 * p.C
    gap = p.pole_spacing()
    ref = fox_h(p, x)
    lo, _ = p.strip()
    centre = lo + 1.5 * gap
    for c in (centre - 0.1 * gap, centre, centre + 0.1 * gap):
        assert fox_h(p, x, ContourPlan(c=c)) == pytest.approx(ref, rel=1e-9)


def test_divergent_parameters():
    # mu* = 1 - 2 < 0
    bad = FoxHParams(m=1, n=0, b=(0.0, 0.0), B=(1.0, 2.0))
    with pytest.raises(DivergenceError):
        fox_h(bad, 1.0)


def test_truncation_failure_reports_bound():
    p = to_fox_h(ChannelSpec.kg(2.5, 4.0))
    with pytest.raises(AccuracyError) as info:
        fox_h(p, 1.0, ContourPlan(max_nodes=8, rtol=1e-15))
    assert info.value.bound is not None


@pytest.mark.parametrize("kwargs", [
    dict(m=2, n=0, b=(0.0,), B=(1.0,)),
    dict(m=1, n=0, b=(0.0,), B=(-1.0,)),
    dict(m=1, n=0, b=(0.0,), B=(1.0,), K=0.0),
    dict(m=1, n=0, b=(0.0,), B=(1.0, 1.0)),
])
def test_invalid_params(kwargs):
    with pytest.raises(SpecError):
        FoxHParams(**kwargs)


def test_params_json_roundtrip():
    p = to_fox_h(ChannelSpec.egk(1.5, 1.2, 2.0, 0.8, 3.0))
    assert FoxHParams.from_json(p.to_json()) == p
    with pytest.raises(SpecError):
        FoxHParams.from_json(dict(p.to_json(), q=7))


def test_negative_snr_rejected():
    with pytest.raises(ValueError):
        foxh_pdf(to_fox_h(ChannelSpec.rayleigh()), -1.0)


def test_channel_mean_from_mellin_transform():
    ch = FoxHChannel(to_fox_h(ChannelSpec.kg(2.5, 4.0, 3.0)))
    assert ch.mean_snr() == pytest.approx(3.0, rel=1e-12)
    with pytest.raises(NotImplementedError):
        ch.sample(np.random.default_rng(0), 3)
