import math

import numpy as np
import pytest
from scipy import stats

from secrecykit.channels import ChannelSpec, analytic_cdf, sample, to_fox_h
from secrecykit.errors import SpecError, UnsupportedFamilyError
from secrecykit.foxh import foxh_pdf
from secrecykit.mixtures import (MGModel, MoGModel, ecdf_mse, fit_mog, log_gamma_gauss_rule,
                                 mg_cdf, mg_from_channel, mg_pdf, model_from_json, mog_cdf,
                                 mog_channel, mog_pdf, select_mog_components)
from secrecykit.montecarlo import stream_rng
from secrecykit.quadrature import integrate

FINE = 4.0 ** np.arange(-14, 4)


@pytest.fixture(scope="module")
def nakagami_fit():
    draws = sample(ChannelSpec.nakagami(2.0), stream_rng(11, 0), 1_000_000)
    return draws, fit_mog(draws, 6, seed=3)


def test_nakagami_is_one_gamma_term():
    model = mg_from_channel(ChannelSpec.nakagami(2.0, 1.0))
    assert len(model.components) == 1
    np.testing.assert_allclose(model.components[0], (4.0, 2.0, 2.0), rtol=1e-14)


def test_rayleigh_is_one_gamma_term():
    model = mg_from_channel(ChannelSpec.rayleigh(1.0))
    np.testing.assert_allclose(model.components[0], (1.0, 1.0, 1.0), rtol=1e-14)
    assert mg_pdf(model, 1.0) == pytest.approx(math.exp(-1), rel=1e-14)
    assert mg_cdf(model, 0.0) == 0.0


def test_nakagami_cdf_value():
    model = mg_from_channel(ChannelSpec.nakagami(2.0, 1.0))
    expected = 1 - 3 * math.exp(-2)
    assert mg_cdf(model, 1.0) == pytest.approx(expected, rel=1e-13)
    quad = integrate(lambda g: mg_pdf(model, g) * (g <= 1.0), breakpoints=[0.5, 1.0], initial=4)
    assert quad.value == pytest.approx(expected, rel=1e-9)


def test_kg_twenty_terms_within_tolerance():
    s = ChannelSpec.kg(2.5, 4.0, 1.0)
    model = mg_from_channel(s, 20)
    assert len(model.components) == 20
    assert model.metadata["max_pdf_error"] < 1e-4
    assert "warning" not in model.metadata
    g = np.geomspace(0.01, 20, 300)
    assert np.max(np.abs(mg_pdf(model, g) - foxh_pdf(to_fox_h(s), g))) < 1e-4
    assert abs(model.total_mass() - 1.0) < 1e-9


def test_kg_shape_order_does_not_matter():
    for ml, msl in ((4.0, 2.5), (2.5, 4.0)):
        model = mg_from_channel(ChannelSpec.kg(ml, msl, 3.0), 20)
        assert model.metadata["max_pdf_error"] < 1e-4 * 3.0


def test_plain_laguerre_rule_is_coarser():
    s = ChannelSpec.kg(2.5, 4.0, 1.0)
    lag = mg_from_channel(s, 20, rule="laguerre").metadata["max_pdf_error"]
    log_gauss = mg_from_channel(s, 20).metadata["max_pdf_error"]
    assert log_gauss < lag


def test_small_budget_warns():
    model = mg_from_channel(ChannelSpec.kg(2.5, 4.0), 2)
    assert "warning" in model.metadata


def test_fisher_f_mixture():
    s = ChannelSpec.fisher_f(2.0, 3.0, 1.0)
    model = mg_from_channel(s, 30)
    assert model.metadata["max_pdf_error"] < 1e-4
    assert "note" in model.metadata


def test_log_gamma_rule_moments():
    nodes, probs = log_gamma_gauss_rule(3.0, 12)
    assert probs.sum() == pytest.approx(1.0, rel=1e-14)
    # E[u] = 3, E[u^2] = 12, E[1/u] = 1/2 for u ~ Gamma(3)
    assert probs @ nodes == pytest.approx(3.0, rel=1e-10)
    assert probs @ nodes ** 2 == pytest.approx(12.0, rel=1e-10)
    assert probs @ (1 / nodes) == pytest.approx(0.5, rel=1e-10)


def test_unsupported_family():
    with pytest.raises(UnsupportedFamilyError):
        mg_from_channel(ChannelSpec.weibull(3.0))
    with pytest.raises(ValueError):
        mg_from_channel(ChannelSpec.rayleigh(), 0)


def test_mg_invariants():
    with pytest.raises(SpecError):
        MGModel(((1.0, 1.0, 2.0),))       # mass 1/2
    with pytest.raises(SpecError):
        MGModel(((1.0, -1.0, 1.0),))
    with pytest.raises(SpecError):
        MGModel(())


def test_mg_cdf_monotone_and_sf():
    model = mg_from_channel(ChannelSpec.kg(2.5, 4.0, 2.0))
    g = np.geomspace(1e-4, 100, 200)
    c = mg_cdf(model, g)
    assert np.all(np.diff(c) >= 0)
    np.testing.assert_allclose(c + model.sf(g), 1.0, atol=1e-12)
    assert model.mean_snr() == pytest.approx(2.0, rel=1e-8)


def test_mg_json_roundtrip():
    model = mg_from_channel(ChannelSpec.kg(2.5, 4.0, 2.0))
    back = model_from_json(model.to_json())
    assert back == model


def test_mog_cdf_at_component_mean():
    model = MoGModel(((1.0, 1.0, 1e-3),), 1.0)
    assert mog_cdf(model, 1.0) == pytest.approx(0.5, abs=1e-15)


def test_mog_invariants():
    with pytest.raises(SpecError):
        MoGModel(((0.5, 1.0, 0.1),), 1.0)
    with pytest.raises(SpecError):
        MoGModel(((1.0, 1.0, 0.0),), 1.0)
    with pytest.raises(SpecError):
        MoGModel(((1.0, 1.0, 0.1),), 0.0)


def test_gaussian_envelope_recovered():
    x = stream_rng(5, 0).normal(1.0, 0.1, 200_000)
    model = fit_mog(x * x, 1, seed=0)
    (w, mu, eta), = model.components
    assert w == 1.0
    assert mu == pytest.approx(1.0, abs=0.01)
    assert eta == pytest.approx(0.1, abs=0.01)


def test_fit_nakagami_cdf_mse(nakagami_fit):
    draws, model = nakagami_fit
    assert len(model.components) == 6
    assert math.fsum(model.weights) == pytest.approx(1.0, abs=1e-12)
    g = np.linspace(0.01, 5.0, 500)
    mse = np.mean((mog_cdf(model, g) - analytic_cdf(ChannelSpec.nakagami(2.0), g)) ** 2)
    assert mse < 1e-5


def test_fit_ks_against_samples(nakagami_fit):
    draws, model = nakagami_fit
    sorted_draws = np.sort(draws)
    idx = np.arange(0, sorted_draws.size, 100)
    ks = np.max(np.abs(mog_cdf(model, sorted_draws[idx]) - (idx + 1) / sorted_draws.size))
    assert ks < 0.01


def test_em_log_likelihood_nondecreasing(nakagami_fit):
    trace = np.array(nakagami_fit[1].metadata["log_likelihood_trace"])
    assert np.all(np.diff(trace) >= -1e-12 * np.abs(trace[1:]))
    assert nakagami_fit[1].metadata["converged"]


def test_fit_deterministic():
    draws = sample(ChannelSpec.kg(2.5, 4.0), stream_rng(9, 0), 20_000)
    a = fit_mog(draws, 4, seed=1)
    b = fit_mog(draws.copy(), 4, seed=1)
    assert a.components == b.components
    assert a.to_json() == b.to_json()


def test_degenerate_component_pruned():
    draws = np.repeat([1.0, 4.0], 500)
    model = fit_mog(draws, 3, seed=0)
    assert model.metadata["pruned"] >= 1
    assert len(model.components) < 3


@pytest.mark.parametrize("samples, C", [(np.ones(100), 0), (np.ones(20), 3), (-np.ones(100), 1)])
def test_fit_argument_errors(samples, C):
    with pytest.raises(ValueError):
        fit_mog(samples, C)


def test_rician_normalisation_defect():
    rng = stream_rng(4, 0)
    envelope = stats.rice(2.0).rvs(100_000, random_state=rng)
    model = fit_mog(envelope ** 2, 6, seed=0)
    ch = mog_channel(model)
    mass = integrate(ch.pdf, breakpoints=model.mean_snr * FINE, initial=1).value
    assert abs(mass - 1.0) < 2e-3
    assert mass + ch.atom == pytest.approx(1.0, abs=1e-7)
    assert model.metadata["normalization_defect"] == pytest.approx(ch.atom)


def test_mog_pdf_integrates_to_cdf():
    model = MoGModel(((0.3, 0.6, 0.2), (0.7, 1.2, 0.25)), 2.0)
    val = integrate(lambda g: mog_pdf(model, g) * (g <= 3.0),
                    breakpoints=np.concatenate([2.0 * FINE, [3.0]]), initial=1).value
    assert val == pytest.approx(mog_cdf(model, 3.0) - model.atom, abs=1e-8)


def test_mog_sampler_matches_clipped_mean():
    model = MoGModel(((0.3, 0.1, 0.3), (0.7, 1.1, 0.2)), 2.0)
    draws = model.sample(stream_rng(1, 0), 400_000)
    assert np.mean(draws == 0.0) == pytest.approx(model.atom, abs=3e-3)
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean() - model.expected_snr()) < 4 * se


def test_component_selection_reaches_target():
    draws = sample(ChannelSpec.nakagami(2.0), stream_rng(3, 0), 50_000)
    model = select_mog_components(draws, seed=0)
    assert model.metadata["cdf_mse"] < 1e-4
    assert ecdf_mse(model, draws) == pytest.approx(model.metadata["cdf_mse"])
    assert len(model.components) <= 15


def test_mog_json_roundtrip(nakagami_fit):
    model = nakagami_fit[1]
    back = model_from_json(model.to_json())
    assert back.components == model.components
    assert back.mean_snr == model.mean_snr
    with pytest.raises(SpecError):
        model_from_json({"type": "nope"})
