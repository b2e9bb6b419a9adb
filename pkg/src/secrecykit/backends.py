"""Channel-model construction for each evaluation backend.

analytic  closed forms (Fox H for product families)
foxh      Fox H density and CDF for every family
mg        Mixture Gamma (Rayleigh, Nakagami-m, K_G, Fisher-F)
mog       Mixture of Gaussian fitted by EM to exact channel draws
mc        Monte Carlo estimate over the exact samplers
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional

from .channels import AnalyticChannel, ChannelSpec, fox_h_channel, sample
from .config import ScenarioConfig
from .metrics import SecrecyScenario, evaluate
from .mixtures import fit_mog, mg_from_channel, mog_channel
from .montecarlo import mc_metric, stream_rng
from .quadrature import QuadratureConfig

__all__ = ["BACKENDS", "MoGFitter", "build_model", "PointResult", "evaluate_point", "scenario_specs"]

BACKENDS = ("analytic", "mg", "mog", "foxh", "mc")

# sample streams for MoG fitting sit far above the Monte Carlo streams
_MOG_STREAM = 1 << 50


class MoGFitter:
    """Fits each channel once at unit mean SNR and rescales.

    The envelope sqrt(gamma / mean) is scale free, so a fit at unit mean
    serves every mean SNR of the same family; sweeps reuse it.  Channels with
    the same family and shape parameters share one fit.
    """

    def __init__(self, components=6, samples=1_000_000, seed=0, max_iter=500, tol=1e-6):
        self.components = components
        self.samples = samples
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol
        self._cache = {}
        self._lock = threading.Lock()

    def fit(self, spec: ChannelSpec):
        unit = spec.with_mean_snr(1.0)
        key = (unit.family, tuple(sorted(unit.params.items())))
        with self._lock:
            if key not in self._cache:
                draws = sample(unit, stream_rng(self.seed, _MOG_STREAM), self.samples)
                self._cache[key] = fit_mog(draws, self.components, seed=self.seed,
                                           max_iter=self.max_iter, tol=self.tol)
            model = self._cache[key]
        return type(model)(model.components, spec.mean_snr * model.mean_snr, model.metadata)


def build_model(spec: ChannelSpec, backend: str, mg_components: int = 20,
                mog: Optional[MoGFitter] = None):
    if backend in ("analytic", "mc"):
        return AnalyticChannel(spec)
    if backend == "foxh":
        return fox_h_channel(spec)
    if backend == "mg":
        return mg_from_channel(spec, mg_components)
    if backend == "mog":
        return mog_channel((mog or MoGFitter()).fit(spec))
    raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


@dataclass(frozen=True)
class PointResult:
    value: float
    std_error: Optional[float] = None
    error_estimate: Optional[float] = None
    clamp_defect: float = 0.0


def scenario_specs(cfg: ScenarioConfig, main_db: Optional[float] = None):
    main = cfg.main.to_spec()
    if main_db is not None:
        main = main.with_mean_snr(10.0 ** (main_db / 10.0))
    return main, cfg.wiretap.to_spec()


def quadrature_config(cfg: ScenarioConfig) -> QuadratureConfig:
    q = cfg.quadrature
    return QuadratureConfig(abs_tol=q.abs_tol, rel_tol=q.rel_tol, max_subdivisions=q.max_subdivisions)


def make_fitter(cfg: ScenarioConfig) -> MoGFitter:
    m = cfg.mog
    return MoGFitter(m.components, m.samples, cfg.seed, m.max_iter, m.tol)


def evaluate_point(cfg: ScenarioConfig, main_db: Optional[float] = None, backend: Optional[str] = None,
                   fitter: Optional[MoGFitter] = None, draws: Optional[int] = None,
                   seed: Optional[int] = None) -> PointResult:
    """One metric value for the configured scenario, optionally at another main mean SNR."""
    backend = backend or cfg.backend
    main_spec, eve_spec = scenario_specs(cfg, main_db)
    if backend == "mog" and fitter is None:
        fitter = make_fitter(cfg)
    main = build_model(main_spec, backend, cfg.mg.components, fitter)
    eve = build_model(eve_spec, backend, cfg.mg.components, fitter)
    scn = SecrecyScenario(main, eve, cfg.rate_threshold)
    if backend == "mc":
        est = mc_metric(scn, cfg.metric, draws or cfg.mc.draws, cfg.seed if seed is None else seed)
        return PointResult(est.value, std_error=est.std_error)
    res = evaluate(cfg.metric, scn, quadrature_config(cfg), asc_method=cfg.asc_method)
    return PointResult(res.value, error_estimate=res.error, clamp_defect=res.clamp_defect)
