"""Mixture Gamma (MG) and Mixture of Gaussian (MoG) channel backends.

MG density:  f(g) = sum_l alpha_l g^(beta_l - 1) exp(-zeta_l g)
MoG:         Gaussian mixture on the normalised envelope x = sqrt(g / g_bar),
             fitted by EM.  The density is used as is, so the mass a component
             puts on x < 0 shows up as an atom of the SNR at 0 (``atom``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy import special

from .channels import ChannelSpec, Family
from .errors import AccuracyError, SpecError, UnsupportedFamilyError

__all__ = [
    "MGModel",
    "MoGModel",
    "mg_from_channel",
    "log_gamma_gauss_rule",
    "mg_pdf",
    "mg_cdf",
    "fit_mog",
    "mog_pdf",
    "mog_cdf",
    "select_mog_components",
    "ecdf_mse",
    "model_from_json",
    "mog_channel",
]

log = logging.getLogger(__name__)

MG_FIT_TOL = 1e-4
_MG_CHECK_GRID = np.geomspace(0.01, 20.0, 200)


def _frozen_meta(meta):
    return MappingProxyType(dict(meta or {}))


def _norm_cdf(z):
    return special.ndtr(z)


# ---------------------------------------------------------------- Mixture Gamma


@dataclass(frozen=True)
class MGModel:
    """Components are (alpha, beta, zeta) triples; see the module docstring."""

    components: tuple
    metadata: Mapping = field(default_factory=dict)
    atom = 0.0

    def __post_init__(self):
        comps = tuple((float(a), float(b), float(z)) for a, b, z in self.components)
        if not comps:
            raise SpecError("an MG model needs at least one component")
        for a, b, z in comps:
            if not (a > 0 and b > 0 and z > 0 and all(map(math.isfinite, (a, b, z)))):
                raise SpecError(f"MG component ({a}, {b}, {z}) must be positive and finite")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "metadata", _frozen_meta(self.metadata))
        defect = abs(self.total_mass() - 1.0)
        if defect > 1e-9:
            raise SpecError(f"MG weights integrate to {self.total_mass():.12g}, not 1")

    @property
    def alpha(self):
        return np.array([c[0] for c in self.components])

    @property
    def beta(self):
        return np.array([c[1] for c in self.components])

    @property
    def zeta(self):
        return np.array([c[2] for c in self.components])

    def mixing_weights(self):
        """alpha * zeta^-beta * Gamma(beta): the probability of each component."""
        b = self.beta
        return np.exp(np.log(self.alpha) - b * np.log(self.zeta) + special.gammaln(b))

    def total_mass(self) -> float:
        return math.fsum(self.mixing_weights())

    def pdf(self, gamma):
        return mg_pdf(self, gamma)

    def cdf(self, gamma):
        return mg_cdf(self, gamma)

    def sf(self, gamma):
        g = np.asarray(gamma, dtype=float)
        out = special.gammaincc(self.beta, np.multiply.outer(g, self.zeta)) @ self.mixing_weights()
        return float(out) if out.ndim == 0 else out

    def mean_snr(self) -> float:
        return float(self.mixing_weights() @ (self.beta / self.zeta))

    def sample(self, rng, size=None):
        n = 1 if size is None else int(np.prod(size))
        idx = rng.choice(len(self.components), size=n, p=self.mixing_weights() / self.total_mass())
        out = rng.gamma(self.beta[idx], 1.0 / self.zeta[idx])
        return out[0] if size is None else out.reshape(size)

    def to_json(self) -> dict:
        return {"type": "mg", "components": [list(c) for c in self.components],
                "metadata": dict(self.metadata)}

    @classmethod
    def from_json(cls, obj) -> "MGModel":
        return cls(tuple(tuple(c) for c in obj["components"]), obj.get("metadata", {}))


def mg_pdf(model: MGModel, gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be non-negative")
    b, z = model.beta, model.zeta
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = (np.log(model.alpha) + np.multiply.outer(np.log(g), b - 1.0)
                - np.multiply.outer(g, z))
        # 0^0 for unit shapes
        logs = np.where(np.multiply.outer(g == 0, b == 1.0), np.log(model.alpha), logs)
    out = np.exp(logs).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def mg_cdf(model: MGModel, gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be non-negative")
    out = special.gammainc(model.beta, np.multiply.outer(g, model.zeta)) @ model.mixing_weights()
    out = np.minimum(out, 1.0)
    return float(out) if out.ndim == 0 else out


def _mg_from_mixture(probs, shape, rates, meta):
    probs = np.asarray(probs, dtype=float)
    rates = np.asarray(rates, dtype=float)
    keep = probs > 0
    probs, rates = probs[keep], rates[keep]
    probs = probs / math.fsum(probs)
    alphas = np.exp(np.log(probs) + shape * np.log(rates) - special.gammaln(shape))
    return MGModel(tuple(zip(alphas, np.full(rates.size, shape), rates)), meta)


def log_gamma_gauss_rule(shape: float, L: int, resolution: int = 4000):
    """L-point Gauss rule for u ~ Gamma(shape, 1) built in the variable log(u).

    Returns nodes u_l and probabilities p_l with sum_l p_l h(u_l) ~ E[h(u)].
    Working in log(u) keeps integrands such as u^-k exp(-c/u) smooth, where
    Gauss-Laguerre in u converges slowly.  Recurrence coefficients come from
    the Stieltjes procedure on a fine trapezoid discretisation of the
    log-gamma density; nodes from the Golub-Welsch eigenproblem.
    """
    lo = math.log(shape) - 45.0 / shape - 5.0
    hi = math.log(shape + 60.0 + 12.0 * math.sqrt(shape))
    # the density is analytic with fast tails, so the trapezoid rule is spectrally accurate
    s = np.linspace(lo, hi, resolution)
    w = np.exp(shape * s - np.exp(s) - special.gammaln(shape))
    a = np.zeros(L)
    b = np.zeros(L)
    p_prev = np.zeros_like(s)
    p = np.ones_like(s)
    norm = w.sum()
    for k in range(L):
        a[k] = np.sum(w * s * p * p) / norm
        p_next = (s - a[k]) * p - (b[k] if k else 0.0) * p_prev
        norm_next = np.sum(w * p_next * p_next)
        if k + 1 < L:
            b[k + 1] = norm_next / norm
        p_prev, p, norm = p, p_next, norm_next
    off = np.sqrt(b[1:])
    nodes, vecs = np.linalg.eigh(np.diag(a) + np.diag(off, 1) + np.diag(off, -1))
    probs = vecs[0] ** 2
    return np.exp(nodes), probs / probs.sum()


def mg_from_channel(spec: ChannelSpec, L: int = 20, check: bool = True,
                    rule: str = "log-gauss") -> MGModel:
    """Mixture Gamma representation of a channel.

    Rayleigh and Nakagami-m are exact single gamma terms.  K_G and Fisher-F
    are gamma laws whose rate is itself gamma distributed; the mixing integral
    is discretised with an L-point Gauss rule over the shadowing variable
    (``rule="log-gauss"``, see ``log_gamma_gauss_rule``, or plain generalized
    Gauss-Laguerre with ``rule="laguerre"``).  For those the max pdf error
    against the Fox H density on [0.01, 20] * mean_snr is stored in
    ``metadata['max_pdf_error']`` with a warning above 1e-4.
    """
    if int(L) != L or L < 1:
        raise ValueError("component budget L must be a positive integer")
    if rule not in ("log-gauss", "laguerre"):
        raise ValueError(f"unknown quadrature rule {rule!r}")
    L = int(L)
    f, p, g = spec.family, spec.params, spec.mean_snr
    if f is Family.RAYLEIGH:
        return _mg_from_mixture([1.0], 1.0, [1.0 / g], {"recipe": "exact"})
    if f is Family.NAKAGAMI_M:
        m = p["m"]
        return _mg_from_mixture([1.0], m, [m / g], {"recipe": "exact"})
    if f is Family.KG:
        # the two gamma factors are interchangeable; components take the smaller
        # shape so the mixture has the right power law at gamma -> 0
        shape, mix_shape = sorted((p["m_l"], p["m_sl"]))
    elif f is Family.FISHER_F:
        shape, mix_shape = p["m"], p["m_s"]
    else:
        raise UnsupportedFamilyError(f"no MG recipe for family {f.value!r}")
    if rule == "laguerre":
        nodes, weights = special.roots_genlaguerre(L, mix_shape - 1.0)
        probs = weights / math.gamma(mix_shape)
    else:
        nodes, probs = log_gamma_gauss_rule(mix_shape, L)
    if f is Family.KG:
        # gamma | u ~ Gamma(shape, rate shape mix_shape / (g u)), u ~ Gamma(mix_shape, 1)
        rates = shape * mix_shape / (g * nodes)
    else:
        # gamma | u ~ Gamma(m, rate m u / (m_s g)), u ~ Gamma(m_s, 1)
        rates = shape * nodes / (mix_shape * g)
    meta = {"recipe": rule, "L": L}
    if f is Family.FISHER_F:
        meta["note"] = "Fisher-F mixture is an approximation of a heavy-tailed law"
    model = _mg_from_mixture(probs, shape, rates, meta)
    if check:
        from .channels import to_fox_h
        from .foxh import foxh_pdf
        grid = g * _MG_CHECK_GRID
        err = float(np.max(np.abs(mg_pdf(model, grid) - foxh_pdf(to_fox_h(spec), grid))))
        meta["max_pdf_error"] = err
        if err > MG_FIT_TOL:
            meta["warning"] = (f"max pdf error {err:.2e} exceeds {MG_FIT_TOL:g}; "
                               f"increase L (currently {L})")
            log.warning("MG fit for %s: %s", f.value, meta["warning"])
        model = MGModel(model.components, meta)
    return model


# ----------------------------------------------------------- Mixture of Gaussian


@dataclass(frozen=True)
class MoGModel:
    """Components are (w, mu, eta) triples on the envelope sqrt(gamma / mean_snr)."""

    components: tuple
    mean_snr: float
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        comps = tuple((float(w), float(m), float(s)) for w, m, s in self.components)
        if not comps:
            raise SpecError("a MoG model needs at least one component")
        for w, m, s in comps:
            if not (w > 0 and s > 0 and math.isfinite(m) and math.isfinite(s)):
                raise SpecError(f"MoG component ({w}, {m}, {s}) needs w > 0 and eta > 0")
        if abs(math.fsum(c[0] for c in comps) - 1.0) > 1e-12:
            raise SpecError("MoG weights must sum to 1")
        if not (self.mean_snr > 0 and math.isfinite(self.mean_snr)):
            raise SpecError("MoG mean_snr must be positive")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "mean_snr", float(self.mean_snr))
        object.__setattr__(self, "metadata", _frozen_meta(self.metadata))

    @property
    def weights(self):
        return np.array([c[0] for c in self.components])

    @property
    def means(self):
        return np.array([c[1] for c in self.components])

    @property
    def stds(self):
        return np.array([c[2] for c in self.components])

    @property
    def atom(self) -> float:
        """Probability the envelope falls below zero, i.e. the density's
        normalisation defect, carried as a point mass at gamma = 0."""
        return float(self.weights @ _norm_cdf(-self.means / self.stds))

    def pdf(self, gamma):
        return mog_pdf(self, gamma)

    def cdf(self, gamma):
        return mog_cdf(self, gamma)

    def sf(self, gamma):
        x = np.sqrt(np.asarray(gamma, dtype=float) / self.mean_snr)
        out = _norm_cdf(-(x[..., None] - self.means) / self.stds) @ self.weights
        return float(out) if out.ndim == 0 else out

    def expected_snr(self) -> float:
        """E[gamma] of the clipped-envelope law the sampler draws from."""
        m, s = self.means, self.stds
        t = m / s
        second = (m * m + s * s) * _norm_cdf(t) + m * s * np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
        return float(self.mean_snr * (self.weights @ second))

    def sample(self, rng, size=None):
        n = 1 if size is None else int(np.prod(size))
        idx = rng.choice(len(self.components), size=n, p=self.weights)
        x = rng.normal(self.means[idx], self.stds[idx])
        out = self.mean_snr * np.maximum(x, 0.0) ** 2
        return out[0] if size is None else out.reshape(size)

    def to_json(self) -> dict:
        return {"type": "mog", "mean_snr": self.mean_snr,
                "components": [list(c) for c in self.components],
                "metadata": dict(self.metadata)}

    @classmethod
    def from_json(cls, obj) -> "MoGModel":
        return cls(tuple(tuple(c) for c in obj["components"]), obj["mean_snr"],
                   obj.get("metadata", {}))


class _MoGChannel:
    """ChannelModel view of a MoGModel (mean_snr as a method)."""

    def __init__(self, model: MoGModel):
        self.model = model
        self.atom = model.atom

    def pdf(self, gamma):
        return mog_pdf(self.model, gamma)

    def cdf(self, gamma):
        return mog_cdf(self.model, gamma)

    def sf(self, gamma):
        return self.model.sf(gamma)

    def mean_snr(self) -> float:
        return self.model.mean_snr

    def sample(self, rng, size=None):
        return self.model.sample(rng, size)


def mog_channel(model: MoGModel) -> _MoGChannel:
    return _MoGChannel(model)


def mog_pdf(model: MoGModel, gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be non-negative")
    x = np.sqrt(g / model.mean_snr)
    w, m, s = model.weights, model.means, model.stds
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (x[..., None] - m) / s
        terms = w / (math.sqrt(8 * math.pi * model.mean_snr) * s) * np.exp(-0.5 * z * z)
        out = terms.sum(axis=-1) / np.sqrt(g)
    out = np.where(g > 0, out, np.inf)
    return float(out) if out.ndim == 0 else out


def mog_cdf(model: MoGModel, gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be non-negative")
    x = np.sqrt(g / model.mean_snr)
    out = _norm_cdf((x[..., None] - model.means) / model.stds) @ model.weights
    return float(out) if out.ndim == 0 else out


def _kmeans_pp(x, k, rng):
    centers = [x[rng.integers(x.size)]]
    d2 = (x - centers[0]) ** 2
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers.append(x[rng.integers(x.size)])
        else:
            centers.append(x[min(np.searchsorted(np.cumsum(d2), rng.random() * total), x.size - 1)])
        d2 = np.minimum(d2, (x - centers[-1]) ** 2)
    return np.array(centers)


_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def _e_step(x, w, m, s, buf):
    """Responsibilities into ``buf`` (n x k) and the mean log-likelihood."""
    np.subtract(x[:, None], m, out=buf)
    buf *= 1.0 / s
    np.square(buf, out=buf)
    buf *= -0.5
    np.exp(buf, out=buf)
    buf *= w / s
    norm = buf @ np.ones(m.size)
    # rows far from every component underflow; redo those in the log domain
    bad = np.flatnonzero(norm < 1e-280)
    log_norm = np.empty_like(norm)
    good = norm >= 1e-280
    log_norm[good] = np.log(norm[good])
    if bad.size:
        z = (x[bad, None] - m) / s
        logp = np.log(w / s) - 0.5 * z * z
        top = logp.max(axis=1, keepdims=True)
        r = np.exp(logp - top)
        tot = r.sum(axis=1, keepdims=True)
        buf[bad] = r / tot
        log_norm[bad] = top[:, 0] + np.log(tot[:, 0])
        norm[bad] = 1.0
    buf /= norm[:, None]
    return float(np.mean(log_norm)) - _LOG_SQRT_2PI


def _em(x, k, rng, max_iter, tol):
    centers = np.sort(_kmeans_pp(x, k, rng))
    # argmin breaks ties toward the lowest index
    label = np.argmin(np.abs(x[:, None] - centers), axis=1)
    counts = np.bincount(label, minlength=k).astype(float)
    spread = x.std() if x.size > 1 else 1.0
    floor = 1e-6 * max(spread, 1e-300)
    if np.any(counts == 0):
        return None, "empty initial cluster"
    w = counts / x.size
    m = np.bincount(label, weights=x, minlength=k) / counts
    var = np.bincount(label, weights=(x - m[label]) ** 2, minlength=k) / counts
    s = np.sqrt(np.maximum(var, floor ** 2))

    # moments about the sample mean keep the variance update well conditioned
    shift = float(x.mean())
    xc = x - shift
    xc2 = xc * xc
    buf = np.empty((x.size, k))
    trace = []
    prev = -math.inf
    converged = False
    for _ in range(max_iter):
        ll = _e_step(x, w, m, s, buf)
        trace.append(ll)
        if ll < prev - 1e-12 * max(1.0, abs(prev)):
            raise AccuracyError(f"EM log-likelihood decreased ({prev!r} -> {ll!r})")
        if ll - prev < tol:
            converged = True
            break
        prev = ll
        nk = np.ones(x.size) @ buf
        if np.any(nk <= 1e-9 * x.size):
            return None, "component lost all responsibility"
        w = nk / x.size
        mc = (xc @ buf) / nk
        var = (xc2 @ buf) / nk - mc * mc
        m = mc + shift
        if np.any(var <= floor ** 2):
            return None, "component variance collapsed"
        s = np.sqrt(var)
    w = w / w.sum()
    return (w, m, s, trace, converged), None


def fit_mog(samples, C: int, seed: int = 0, max_iter: int = 500, tol: float = 1e-6) -> MoGModel:
    """Fit a C-component MoG to SNR samples by EM.

    Deterministic for fixed (samples, C, seed).  ``tol`` is on the per-sample
    log-likelihood.  A component that collapses is pruned and the fit restarts
    with C - 1 components; the count is kept in ``metadata['pruned']``.
    """
    if int(C) != C or C < 1:
        raise ValueError("component count C must be a positive integer")
    g = np.asarray(samples, dtype=float).ravel()
    if g.size < 10 * C:
        raise ValueError(f"need at least {10 * C} samples for C={C}, got {g.size}")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ValueError("samples must be finite non-negative SNRs")
    mean = float(g.mean())
    if mean <= 0:
        raise ValueError("samples must have a positive mean")
    x = np.sqrt(g / mean)
    pruned = []
    k = int(C)
    while True:
        rng = np.random.Generator(np.random.Philox(key=[seed, k]))
        result, why = _em(x, k, rng, max_iter, tol)
        if result is not None:
            break
        if k == 1:
            raise AccuracyError(f"EM failed with a single component: {why}")
        pruned.append(why)
        k -= 1
    w, m, s, trace, converged = result
    order = np.argsort(m, kind="stable")
    comps = tuple(zip(w[order], m[order], s[order]))
    meta = {"seed": seed, "samples": int(g.size), "requested_components": int(C),
            "pruned": len(pruned), "iterations": len(trace), "converged": converged,
            "log_likelihood": trace[-1], "log_likelihood_trace": trace}
    if pruned:
        meta["prune_reasons"] = pruned
    model = MoGModel(comps, mean, meta)
    meta["normalization_defect"] = model.atom
    return MoGModel(comps, mean, meta)


def ecdf_mse(model: MoGModel, samples, points: int = 200) -> float:
    """Mean squared gap between the model CDF and the empirical CDF at sample quantiles."""
    g = np.sort(np.asarray(samples, dtype=float).ravel())
    idx = np.unique(np.linspace(0, g.size - 1, points).astype(int))
    # ties: the empirical cdf counts every copy of the value
    at = g[idx]
    emp = np.searchsorted(g, at, side="right") / g.size
    return float(np.mean((mog_cdf(model, at) - emp) ** 2))


def select_mog_components(samples, seed: int = 0, target_mse: float = 1e-4, max_components: int = 15,
                          max_iter: int = 500, tol: float = 1e-6) -> MoGModel:
    """Smallest C (up to ``max_components``) whose fit reaches the CDF-MSE target."""
    best = None
    for c in range(1, max_components + 1):
        model = fit_mog(samples, c, seed=seed, max_iter=max_iter, tol=tol)
        mse = ecdf_mse(model, samples)
        meta = dict(model.metadata, cdf_mse=mse)
        model = MoGModel(model.components, model.mean_snr, meta)
        if best is None or mse < best[0]:
            best = (mse, model)
        if mse < target_mse:
            return model
    mse, model = best
    meta = dict(model.metadata, warning=f"CDF-MSE {mse:.2e} above target {target_mse:g} "
                                        f"with up to {max_components} components")
    log.warning(meta["warning"])
    return MoGModel(model.components, model.mean_snr, meta)


def model_from_json(obj):
    kind = obj.get("type")
    if kind == "mg":
        return MGModel.from_json(obj)
    if kind == "mog":
        return MoGModel.from_json(obj)
    raise SpecError(f"unknown mixture model type {kind!r}")
