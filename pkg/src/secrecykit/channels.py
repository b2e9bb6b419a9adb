"""Fading-channel catalog in the SNR domain.

Every family is parameterised by its shape parameters and the average SNR
``mean_snr`` (linear scale).  For each family we provide the Fox H
representation, closed-form PDF/CDF where an elementary one exists, and an
exact sampler used by the Monte Carlo oracle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy import special

from .errors import SpecError, UnsupportedFamilyError
from .foxh import FoxHChannel, FoxHParams, foxh_cdf, foxh_pdf, foxh_sf

__all__ = [
    "Family",
    "ChannelSpec",
    "to_fox_h",
    "analytic_pdf",
    "analytic_cdf",
    "analytic_sf",
    "has_closed_form",
    "expected_snr",
    "sample",
    "AnalyticChannel",
    "db_to_linear",
    "linear_to_db",
]


class Family(str, enum.Enum):
    RAYLEIGH = "rayleigh"
    NAKAGAMI_M = "nakagami_m"
    WEIBULL = "weibull"
    ALPHA_MU = "alpha_mu"
    MAXWELL = "maxwell"
    CASCADED_ALPHA_MU = "cascaded_alpha_mu"
    FISHER_F = "fisher_f"
    KG = "kg"
    EGK = "egk"


PARAM_NAMES: dict[Family, tuple[str, ...]] = {
    Family.RAYLEIGH: (),
    Family.NAKAGAMI_M: ("m",),
    Family.WEIBULL: ("alpha",),
    Family.ALPHA_MU: ("alpha", "mu"),
    Family.MAXWELL: (),
    # per-hop lists; N = len(alpha)
    Family.CASCADED_ALPHA_MU: ("alpha", "mu"),
    Family.FISHER_F: ("m", "m_s"),
    Family.KG: ("m_l", "m_sl"),
    Family.EGK: ("m", "xi", "m_s", "xi_s"),
}

_CLOSED_FORM = {Family.RAYLEIGH, Family.NAKAGAMI_M, Family.WEIBULL, Family.ALPHA_MU,
                Family.MAXWELL, Family.FISHER_F}


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(lin):
    return 10.0 * np.log10(lin)


def _positive(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise SpecError(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class ChannelSpec:
    """A fading family, its shape parameters and its linear average SNR."""

    family: Family
    params: Mapping = field(default_factory=dict)
    mean_snr: float = 1.0

    def __post_init__(self):
        try:
            family = Family(self.family)
        except ValueError:
            raise SpecError(f"unknown fading family {self.family!r}") from None
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "mean_snr", _positive("mean_snr", self.mean_snr))
        names = PARAM_NAMES[family]
        given = dict(self.params)
        missing = [k for k in names if k not in given]
        extra = [k for k in given if k not in names]
        if missing or extra:
            raise SpecError(f"{family.value} expects parameters {list(names)}; "
                            f"missing {missing}, unexpected {extra}")
        clean = {}
        if family is Family.CASCADED_ALPHA_MU:
            alphas = tuple(_positive("alpha", v) for v in np.atleast_1d(given["alpha"]))
            mus = tuple(_positive("mu", v) for v in np.atleast_1d(given["mu"]))
            if len(alphas) != len(mus) or len(alphas) < 1:
                raise SpecError("cascaded alpha and mu lists must have equal length N >= 1")
            clean = {"alpha": alphas, "mu": mus}
        else:
            clean = {k: _positive(k, given[k]) for k in names}
        object.__setattr__(self, "params", MappingProxyType(clean))

    def __getitem__(self, key):
        return self.params[key]

    def with_mean_snr(self, mean_snr: float) -> "ChannelSpec":
        return ChannelSpec(self.family, dict(self.params), mean_snr)

    def to_json(self) -> dict:
        params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()}
        return {"family": self.family.value, "params": params,
                "mean_snr_db": float(linear_to_db(self.mean_snr))}

    @classmethod
    def from_json(cls, obj) -> "ChannelSpec":
        from .config import ChannelConfig
        return ChannelConfig.model_validate(obj).to_spec()

    # convenience constructors
    @classmethod
    def rayleigh(cls, mean_snr=1.0):
        return cls(Family.RAYLEIGH, {}, mean_snr)

    @classmethod
    def nakagami(cls, m, mean_snr=1.0):
        return cls(Family.NAKAGAMI_M, {"m": m}, mean_snr)

    @classmethod
    def weibull(cls, alpha, mean_snr=1.0):
        return cls(Family.WEIBULL, {"alpha": alpha}, mean_snr)

    @classmethod
    def alpha_mu(cls, alpha, mu, mean_snr=1.0):
        return cls(Family.ALPHA_MU, {"alpha": alpha, "mu": mu}, mean_snr)

    @classmethod
    def maxwell(cls, mean_snr=1.0):
        return cls(Family.MAXWELL, {}, mean_snr)

    @classmethod
    def cascaded_alpha_mu(cls, alphas, mus, mean_snr=1.0):
        return cls(Family.CASCADED_ALPHA_MU, {"alpha": tuple(alphas), "mu": tuple(mus)}, mean_snr)

    @classmethod
    def fisher_f(cls, m, m_s, mean_snr=1.0):
        return cls(Family.FISHER_F, {"m": m, "m_s": m_s}, mean_snr)

    @classmethod
    def kg(cls, m_l, m_sl, mean_snr=1.0):
        return cls(Family.KG, {"m_l": m_l, "m_sl": m_sl}, mean_snr)

    @classmethod
    def egk(cls, m, xi, m_s, xi_s, mean_snr=1.0):
        return cls(Family.EGK, {"m": m, "xi": xi, "m_s": m_s, "xi_s": xi_s}, mean_snr)


def _alpha_mu_ratio(alpha, mu):
    # Gamma(mu + 2/alpha) / Gamma(mu)
    return math.exp(math.lgamma(mu + 2.0 / alpha) - math.lgamma(mu))


def to_fox_h(spec: ChannelSpec) -> FoxHParams:
    """Fox H parameters (K, C, m, n, a, A, b, B) of the family's SNR density."""
    f, p, g = spec.family, spec.params, spec.mean_snr
    if f is Family.RAYLEIGH:
        return FoxHParams(m=1, n=0, b=(0.0,), B=(1.0,), K=1.0 / g, C=1.0 / g)
    if f is Family.NAKAGAMI_M:
        m = p["m"]
        return FoxHParams(m=1, n=0, b=(m - 1.0,), B=(1.0,),
                          K=m / (math.gamma(m) * g), C=m / g)
    if f is Family.WEIBULL:
        a = p["alpha"]
        k = math.gamma(1.0 + 2.0 / a) / g
        return FoxHParams(m=1, n=0, b=(1.0 - 2.0 / a,), B=(2.0 / a,), K=k, C=k)
    if f is Family.ALPHA_MU:
        a, mu = p["alpha"], p["mu"]
        r = _alpha_mu_ratio(a, mu)
        return FoxHParams(m=1, n=0, b=(mu - 2.0 / a,), B=(2.0 / a,),
                          K=r / (math.gamma(mu) * g), C=r / g)
    if f is Family.MAXWELL:
        return FoxHParams(m=1, n=0, b=(0.5,), B=(1.0,),
                          K=3.0 / (math.sqrt(math.pi) * g), C=3.0 / (2.0 * g))
    if f is Family.CASCADED_ALPHA_MU:
        alphas, mus = p["alpha"], p["mu"]
        n_hops = len(alphas)
        ratio = math.prod(_alpha_mu_ratio(a, mu) for a, mu in zip(alphas, mus))
        gam = math.prod(math.gamma(mu) for mu in mus)
        return FoxHParams(m=n_hops, n=0,
                          b=tuple(mu - 2.0 / a for a, mu in zip(alphas, mus)),
                          B=tuple(2.0 / a for a in alphas),
                          K=ratio / (gam * g), C=ratio / g)
    if f is Family.FISHER_F:
        m, ms = p["m"], p["m_s"]
        return FoxHParams(m=1, n=1, a=(-ms,), A=(1.0,), b=(m - 1.0,), B=(1.0,),
                          K=m / (ms * g * math.gamma(m) * math.gamma(ms)), C=m / (ms * g))
    if f is Family.KG:
        ml, msl = p["m_l"], p["m_sl"]
        return FoxHParams(m=2, n=0, b=(ml - 1.0, msl - 1.0), B=(1.0, 1.0),
                          K=ml * msl / (math.gamma(ml) * math.gamma(msl) * g),
                          C=ml * msl / g)
    if f is Family.EGK:
        m, xi, ms, xis = p["m"], p["xi"], p["m_s"], p["xi_s"]
        num = math.gamma(m + 1.0 / xi) * math.gamma(ms + 1.0 / xis)
        den = math.gamma(m) * math.gamma(ms)
        return FoxHParams(m=2, n=0, b=(m - 1.0 / xi, ms - 1.0 / xis), B=(1.0 / xi, 1.0 / xis),
                          K=num / (g * den * den), C=num / (g * den))
    raise UnsupportedFamilyError(f"no Fox H mapping for family {f!r}")


def has_closed_form(family) -> bool:
    """False for product-type families whose reference density is the Fox H backend."""
    return Family(family) in _CLOSED_FORM


def _snr(gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0) or np.any(np.isnan(g)):
        raise ValueError("SNR must be non-negative")
    return g


def _alpha_mu_shape(spec):
    f, p = spec.family, spec.params
    if f is Family.RAYLEIGH:
        return 2.0, 1.0
    if f is Family.NAKAGAMI_M:
        return 2.0, p["m"]
    if f is Family.MAXWELL:
        return 2.0, 1.5
    if f is Family.WEIBULL:
        return p["alpha"], 1.0
    return p["alpha"], p["mu"]


def analytic_pdf(spec: ChannelSpec, gamma):
    """Closed-form SNR density; Fox H evaluation for product families."""
    g = _snr(gamma)
    f = spec.family
    if f is Family.RAYLEIGH:
        out = np.exp(-g / spec.mean_snr) / spec.mean_snr
    elif f in (Family.NAKAGAMI_M, Family.MAXWELL, Family.WEIBULL, Family.ALPHA_MU):
        alpha, mu = _alpha_mu_shape(spec)
        scale = _alpha_mu_ratio(alpha, mu) / spec.mean_snr
        x = scale * g
        with np.errstate(divide="ignore"):
            u = x ** (alpha / 2.0)
            log_f = (math.log(alpha / 2.0 * scale) - math.lgamma(mu)
                     + (alpha * mu / 2.0 - 1.0) * np.log(x) - u)
        out = np.exp(log_f)
    elif f is Family.FISHER_F:
        m, ms = spec["m"], spec["m_s"]
        scale = m / (ms * spec.mean_snr)
        x = scale * g
        with np.errstate(divide="ignore"):
            log_f = (math.log(scale) - special.betaln(m, ms)
                     + (m - 1.0) * np.log(x) - (m + ms) * np.log1p(x))
        out = np.exp(log_f)
    else:
        out = foxh_pdf(to_fox_h(spec), g)
    return float(out) if np.ndim(out) == 0 else out


def analytic_cdf(spec: ChannelSpec, gamma):
    g = _snr(gamma)
    f = spec.family
    if f is Family.RAYLEIGH:
        out = -np.expm1(-g / spec.mean_snr)
    elif f in (Family.NAKAGAMI_M, Family.MAXWELL, Family.WEIBULL, Family.ALPHA_MU):
        alpha, mu = _alpha_mu_shape(spec)
        x = _alpha_mu_ratio(alpha, mu) / spec.mean_snr * g
        out = special.gammainc(mu, x ** (alpha / 2.0))
    elif f is Family.FISHER_F:
        m, ms = spec["m"], spec["m_s"]
        x = m / (ms * spec.mean_snr) * g
        out = special.betainc(m, ms, x / (1.0 + x))
    else:
        out = foxh_cdf(to_fox_h(spec), g)
    return float(out) if np.ndim(out) == 0 else out


def analytic_sf(spec: ChannelSpec, gamma):
    g = _snr(gamma)
    f = spec.family
    if f is Family.RAYLEIGH:
        out = np.exp(-g / spec.mean_snr)
    elif f in (Family.NAKAGAMI_M, Family.MAXWELL, Family.WEIBULL, Family.ALPHA_MU):
        alpha, mu = _alpha_mu_shape(spec)
        x = _alpha_mu_ratio(alpha, mu) / spec.mean_snr * g
        out = special.gammaincc(mu, x ** (alpha / 2.0))
    elif f is Family.FISHER_F:
        m, ms = spec["m"], spec["m_s"]
        x = m / (ms * spec.mean_snr) * g
        out = special.betainc(ms, m, 1.0 / (1.0 + x))
    else:
        out = foxh_sf(to_fox_h(spec), g)
    return float(out) if np.ndim(out) == 0 else out


def expected_snr(spec: ChannelSpec) -> float:
    """True E[gamma].  Equals mean_snr except for Fisher-F, whose Fox H row
    uses gamma-bar as a scale: E = mean_snr * m_s / (m_s - 1), infinite for m_s <= 1."""
    if spec.family is Family.FISHER_F:
        ms = spec["m_s"]
        return spec.mean_snr * ms / (ms - 1.0) if ms > 1 else math.inf
    return spec.mean_snr


def _unit_alpha_mu(rng, alpha, mu, size):
    w = rng.gamma(mu, 1.0, size)
    return w ** (2.0 / alpha) / _alpha_mu_ratio(alpha, mu)


def sample(spec: ChannelSpec, rng: np.random.Generator, size=None):
    """Exact SNR draws.  ``rng`` is a caller-owned numpy Generator."""
    f, p, g = spec.family, spec.params, spec.mean_snr
    if f is Family.RAYLEIGH:
        out = g * rng.exponential(1.0, size)
    elif f in (Family.NAKAGAMI_M, Family.MAXWELL):
        m = p["m"] if f is Family.NAKAGAMI_M else 1.5
        out = g * rng.gamma(m, 1.0, size) / m
    elif f in (Family.WEIBULL, Family.ALPHA_MU):
        alpha, mu = _alpha_mu_shape(spec)
        out = g * _unit_alpha_mu(rng, alpha, mu, size)
    elif f is Family.CASCADED_ALPHA_MU:
        out = g
        for alpha, mu in zip(p["alpha"], p["mu"]):
            out = out * _unit_alpha_mu(rng, alpha, mu, size)
    elif f is Family.FISHER_F:
        m, ms = p["m"], p["m_s"]
        ratio = rng.gamma(m, 1.0, size) / rng.gamma(ms, 1.0, size)
        out = ratio * ms * g / m
    elif f is Family.KG:
        ml, msl = p["m_l"], p["m_sl"]
        out = g * (rng.gamma(ml, 1.0, size) / ml) * (rng.gamma(msl, 1.0, size) / msl)
    elif f is Family.EGK:
        out = (g * _unit_alpha_mu(rng, 2.0 * p["xi"], p["m"], size)
               * _unit_alpha_mu(rng, 2.0 * p["xi_s"], p["m_s"], size))
    else:  # pragma: no cover - Family is closed
        raise UnsupportedFamilyError(f"no sampler for {f!r}")
    return out


@dataclass(frozen=True)
class AnalyticChannel:
    """ChannelModel over the closed-form densities (Fox H for product families)."""

    spec: ChannelSpec
    atom: float = 0.0

    def pdf(self, gamma):
        return analytic_pdf(self.spec, gamma)

    def cdf(self, gamma):
        return analytic_cdf(self.spec, gamma)

    def sf(self, gamma):
        return analytic_sf(self.spec, gamma)

    def mean_snr(self) -> float:
        return self.spec.mean_snr

    def sample(self, rng, size=None):
        return sample(self.spec, rng, size)


def fox_h_channel(spec: ChannelSpec, plan=None) -> FoxHChannel:
    ch = FoxHChannel(to_fox_h(spec), spec)
    return ch.with_plan(plan) if plan is not None else ch
