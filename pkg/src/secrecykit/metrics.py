"""Secrecy metrics of a wiretap pair of independent fading channels.

A channel model is any object with ``pdf``, ``cdf`` (optionally ``sf``), a
``mean_snr()`` method and an optional point mass ``atom`` at gamma = 0 (the
MoG backend has one).  A bare ``ChannelSpec`` is wrapped in its closed-form
model.  Every metric is a one-dimensional integral over [0, inf) computed by
``quadrature.integrate``:

    sop        P(C_s <= R) = atom_E F_B(2^R - 1) + int f_E(g) F_B(2^R (1 + g) - 1) dg
    sop bound  atom_E F_B(0) + int f_E(g) F_B(2^R g) dg
    pnz        P(g_B > g_E) = atom_E S_B(0) + int f_E(g) S_B(g) dg
    asc        E[C_s] = (1 / ln 2) int F_E(x) S_B(x) / (1 + x) dx
    esc        [E log2(1 + g_B) - E log2(1 + g_E)]^+

The ASC form follows from C_s = (1/ln 2) int 1{g_E < x < g_B} / (1 + x) dx and
Fubini; ``asc(..., method="iterated")`` evaluates the double integral over
both densities directly instead.

Every integral is taken in u = sqrt(g), which turns the 1/sqrt(g) density
singularity of the MoG backend (and g^(beta - 1) power laws generally) into
something Gauss-Legendre handles without fuss.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, NamedTuple, Optional

import numpy as np

from .channels import AnalyticChannel, ChannelSpec
from .errors import AccuracyError
from .quadrature import DEFAULT_CONFIG, QuadratureConfig, integrate

__all__ = [
    "SecrecyScenario",
    "MetricResult",
    "METRICS",
    "secrecy_capacity",
    "sop",
    "sop_lower_bound",
    "pnz",
    "asc",
    "esc",
    "ergodic_capacity",
    "evaluate",
]

log = logging.getLogger(__name__)

METRICS = ("sop", "sop_lower_bound", "pnz", "asc", "esc")

_LN2 = math.log(2.0)
_CLAMP_SILENT = 1e-9
_CLAMP_FATAL = 1e-6
# breakpoints at mean * 4^k put nodes wherever a density carries mass and grade
# the mesh geometrically toward the power-law behaviour many densities have at 0
_BREAK_POINTS = 4.0 ** np.arange(-12, 4)


def _as_model(channel):
    return AnalyticChannel(channel) if isinstance(channel, ChannelSpec) else channel


def _mean_of(model) -> float:
    m = model.mean_snr
    return float(m() if callable(m) else m)


def _atom(model) -> float:
    return float(getattr(model, "atom", 0.0))


def _sf(model, x):
    fn = getattr(model, "sf", None)
    return fn(x) if fn is not None else 1.0 - model.cdf(x)


def _integrate_snr(func, breakpoints, cfg, lower=0.0):
    """int_lower^inf func(g) dg, computed as int 2 u func(u^2) du."""
    points = [math.sqrt(b) for b in breakpoints if b > 0]
    return integrate(lambda u: 2.0 * u * func(u * u), lower=math.sqrt(lower),
                     breakpoints=points, cfg=cfg, initial=1)


def _scale_points(mean):
    if not (mean > 0 and math.isfinite(mean)):
        return []
    return list(mean * _BREAK_POINTS)


@dataclass(frozen=True)
class SecrecyScenario:
    """Main (Bob) and wiretap (Eve) channels plus the target secrecy rate R_t
    in bits/s/Hz."""

    main: Any
    wiretap: Any
    rate_threshold: float = 0.0

    def __post_init__(self):
        rate = float(self.rate_threshold)
        if not (math.isfinite(rate) and rate >= 0):
            raise ValueError(f"rate threshold must be finite and >= 0, got {rate!r}")
        object.__setattr__(self, "rate_threshold", rate)
        object.__setattr__(self, "main", _as_model(self.main))
        object.__setattr__(self, "wiretap", _as_model(self.wiretap))

    def with_rate(self, rate: float) -> "SecrecyScenario":
        return SecrecyScenario(self.main, self.wiretap, rate)


class MetricResult(NamedTuple):
    value: float
    error: float
    clamp_defect: float = 0.0


def secrecy_capacity(gamma_b, gamma_e):
    """Instantaneous secrecy capacity [log2(1 + g_B) - log2(1 + g_E)]^+."""
    gb = np.asarray(gamma_b, dtype=float)
    ge = np.asarray(gamma_e, dtype=float)
    if np.any(gb < 0) or np.any(ge < 0):
        raise ValueError("SNRs must be non-negative")
    out = np.maximum((np.log1p(gb) - np.log1p(ge)) / _LN2, 0.0)
    return float(out) if out.ndim == 0 else out


def _probability(value, error, name) -> MetricResult:
    if 0.0 <= value <= 1.0:
        return MetricResult(value, error)
    over = -value if value < 0 else value - 1.0
    if over > _CLAMP_FATAL:
        raise AccuracyError(f"{name} evaluated to {value!r}, outside [0, 1] by {over:.2e}",
                            estimate=value, bound=error)
    if over > _CLAMP_SILENT:
        log.warning("%s clamped into [0, 1]; defect %.2e", name, over)
    return MetricResult(min(max(value, 0.0), 1.0), error, over)


def _against_wiretap(scn, inner, cfg, extra=()):
    """int f_E(g) inner(g) dg over [0, inf)."""
    eve = scn.wiretap
    points = _scale_points(_mean_of(eve)) + _scale_points(_mean_of(scn.main)) + list(extra)
    res = _integrate_snr(lambda g: eve.pdf(g) * inner(g), points, cfg)
    return res.value, res.error


def _sop(scn, cfg) -> MetricResult:
    bob, rate = scn.main, scn.rate_threshold
    excess = math.expm1(rate * _LN2)      # 2^R - 1, exact near R = 0
    growth = excess + 1.0

    def threshold(g):
        return excess * (1.0 + g) + g

    # g where the threshold meets Bob's scale points
    extra = [(b - excess) / growth for b in _scale_points(_mean_of(bob))]
    val, err = _against_wiretap(scn, lambda g: bob.cdf(threshold(g)), cfg, extra)
    val += _atom(scn.wiretap) * float(bob.cdf(excess))
    return _probability(val, err, "sop")


def _sop_lower_bound(scn, cfg) -> MetricResult:
    bob = scn.main
    growth = 2.0 ** scn.rate_threshold
    extra = [b / growth for b in _scale_points(_mean_of(bob))]
    val, err = _against_wiretap(scn, lambda g: bob.cdf(growth * g), cfg, extra)
    val += _atom(scn.wiretap) * float(bob.cdf(0.0))
    return _probability(val, err, "sop_lower_bound")


def _pnz(scn, cfg) -> MetricResult:
    bob = scn.main
    val, err = _against_wiretap(scn, lambda g: _sf(bob, g), cfg)
    val += _atom(scn.wiretap) * float(_sf(bob, 0.0))
    return _probability(val, err, "pnz")


def _asc_cdf(scn, cfg) -> MetricResult:
    bob, eve = scn.main, scn.wiretap
    points = _scale_points(_mean_of(eve)) + _scale_points(_mean_of(bob))
    res = _integrate_snr(lambda x: eve.cdf(x) * _sf(bob, x) / (1.0 + x), points, cfg)
    return MetricResult(res.value / _LN2, res.error / _LN2)


def _asc_iterated(scn, cfg) -> MetricResult:
    bob, eve = scn.main, scn.wiretap
    bob_points = _scale_points(_mean_of(bob))
    count = 0
    inner_err = 0.0

    def inner(ys):
        nonlocal count, inner_err
        out = np.empty(ys.size)
        for i, y in enumerate(ys):
            count += 1
            if count > cfg.max_inner:
                raise AccuracyError(f"iterated ASC exceeded {cfg.max_inner} inner integrals")
            ly = math.log1p(y)
            res = _integrate_snr(lambda x: bob.pdf(x) * (np.log1p(x) - ly), bob_points, cfg,
                                 lower=float(y))
            out[i] = res.value
            inner_err = max(inner_err, res.error)
        return out

    val, err = _against_wiretap(scn, inner, cfg)
    cap_b, err_b = _log_moment(bob, cfg) if _atom(eve) else (0.0, 0.0)
    val = val / _LN2 + _atom(eve) * cap_b
    return MetricResult(val, err / _LN2 + inner_err / _LN2 + err_b)


def _log_moment(model, cfg):
    """E[log2(1 + gamma)] (the point mass at 0 contributes nothing)."""
    res = _integrate_snr(lambda g: model.pdf(g) * np.log1p(g), _scale_points(_mean_of(model)), cfg)
    return res.value / _LN2, res.error / _LN2


def _esc(scn, cfg) -> MetricResult:
    cb, eb = _log_moment(scn.main, cfg)
    ce, ee = _log_moment(scn.wiretap, cfg)
    return MetricResult(max(cb - ce, 0.0), eb + ee)


def _cfg(cfg):
    return DEFAULT_CONFIG if cfg is None else cfg


def evaluate(metric: str, scn: SecrecyScenario, cfg: Optional[QuadratureConfig] = None,
             asc_method: str = "cdf") -> MetricResult:
    """Value, quadrature error estimate and clamp defect of one metric."""
    cfg = _cfg(cfg)
    if metric == "sop":
        return _sop(scn, cfg)
    if metric == "sop_lower_bound":
        return _sop_lower_bound(scn, cfg)
    if metric == "pnz":
        return _pnz(scn, cfg)
    if metric == "asc":
        if asc_method == "cdf":
            return _asc_cdf(scn, cfg)
        if asc_method == "iterated":
            return _asc_iterated(scn, cfg)
        raise ValueError(f"unknown ASC method {asc_method!r}")
    if metric == "esc":
        return _esc(scn, cfg)
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def sop(scn: SecrecyScenario, cfg: Optional[QuadratureConfig] = None) -> float:
    """Secrecy outage probability P(C_s <= R_t)."""
    return _sop(scn, _cfg(cfg)).value


def sop_lower_bound(scn: SecrecyScenario, cfg: Optional[QuadratureConfig] = None) -> float:
    """Lower bound of the SOP, exact at R_t = 0."""
    return _sop_lower_bound(scn, _cfg(cfg)).value


def pnz(scn: SecrecyScenario, cfg: Optional[QuadratureConfig] = None) -> float:
    """Probability of non-zero secrecy capacity P(g_B > g_E)."""
    return _pnz(scn, _cfg(cfg)).value


def asc(scn: SecrecyScenario, cfg: Optional[QuadratureConfig] = None, method: str = "cdf") -> float:
    """Average secrecy capacity E[C_s] in bits/s/Hz."""
    return evaluate("asc", scn, cfg, asc_method=method).value


def esc(scn: SecrecyScenario, cfg: Optional[QuadratureConfig] = None) -> float:
    """Ergodic secrecy capacity [E log2(1 + g_B) - E log2(1 + g_E)]^+."""
    return _esc(scn, _cfg(cfg)).value


def ergodic_capacity(channel, cfg: Optional[QuadratureConfig] = None) -> float:
    """E[log2(1 + gamma)] of a single channel."""
    return _log_moment(_as_model(channel), _cfg(cfg))[0]
