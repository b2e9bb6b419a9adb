"""JSON configuration schema for the command-line tools.

Channel example::

    {"family": "nakagami_m", "params": {"m": 2.5}, "mean_snr_db": 10.0}

One example per family is listed in ``FAMILY_EXAMPLES``.  All models reject
unknown keys and pydantic reports every failing field at once.
"""

from __future__ import annotations

import math
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .channels import PARAM_NAMES, ChannelSpec, Family, db_to_linear
from .errors import SpecError

__all__ = [
    "ChannelConfig",
    "ScenarioConfig",
    "SweepRange",
    "SweepConfig",
    "FoxHEvalConfig",
    "MG_FAMILIES",
    "FAMILY_EXAMPLES",
]

Metric = Literal["sop", "sop_lower_bound", "pnz", "asc", "esc"]
Backend = Literal["analytic", "mg", "mog", "foxh", "mc"]

MG_FAMILIES = frozenset({Family.RAYLEIGH, Family.NAKAGAMI_M, Family.KG, Family.FISHER_F})

FAMILY_EXAMPLES = {
    "rayleigh": {"family": "rayleigh", "params": {}, "mean_snr_db": 10.0},
    "nakagami_m": {"family": "nakagami_m", "params": {"m": 2.5}, "mean_snr_db": 10.0},
    "weibull": {"family": "weibull", "params": {"alpha": 3.0}, "mean_snr_db": 10.0},
    "alpha_mu": {"family": "alpha_mu", "params": {"alpha": 2.5, "mu": 1.5}, "mean_snr_db": 10.0},
    "maxwell": {"family": "maxwell", "params": {}, "mean_snr_db": 10.0},
    "cascaded_alpha_mu": {"family": "cascaded_alpha_mu",
                          "params": {"alpha": [2.0, 2.5], "mu": [1.0, 2.0]}, "mean_snr_db": 10.0},
    "fisher_f": {"family": "fisher_f", "params": {"m": 2.0, "m_s": 3.0}, "mean_snr_db": 10.0},
    "kg": {"family": "kg", "params": {"m_l": 2.5, "m_sl": 4.0}, "mean_snr_db": 10.0},
    "egk": {"family": "egk", "params": {"m": 1.5, "xi": 1.2, "m_s": 2.0, "xi_s": 0.8},
            "mean_snr_db": 10.0},
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _finite(v):
    if v is not None and not math.isfinite(v):
        raise ValueError("must be finite")
    return v


class ChannelConfig(_Strict):
    family: Family
    params: dict[str, Union[float, list[float]]] = Field(default_factory=dict)
    mean_snr_db: float

    _check_db = field_validator("mean_snr_db")(_finite)

    @model_validator(mode="after")
    def _check_params(self):
        names = PARAM_NAMES[self.family]
        problems = []
        for key in names:
            if key not in self.params:
                problems.append(f"params.{key}: required for {self.family.value}")
        for key, value in self.params.items():
            if key not in names:
                problems.append(f"params.{key}: not a parameter of {self.family.value} "
                                f"(expected {list(names)})")
                continue
            values = value if isinstance(value, list) else [value]
            is_list = self.family is Family.CASCADED_ALPHA_MU
            if isinstance(value, list) != is_list:
                problems.append(f"params.{key}: must be a {'list' if is_list else 'number'}")
            elif not values or not all(math.isfinite(v) and v > 0 for v in values):
                problems.append(f"params.{key}: must be positive and finite")
        if (self.family is Family.CASCADED_ALPHA_MU and not problems
                and len(self.params["alpha"]) != len(self.params["mu"])):
            problems.append("params.alpha/params.mu: lists must have equal length")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def to_spec(self) -> ChannelSpec:
        return ChannelSpec(self.family, self.params, float(db_to_linear(self.mean_snr_db)))


class QuadratureOptions(_Strict):
    abs_tol: float = Field(1e-10, gt=0)
    rel_tol: float = Field(1e-8, gt=0)
    max_subdivisions: int = Field(2000, ge=1)


class MGOptions(_Strict):
    components: int = Field(20, ge=1)


class MoGOptions(_Strict):
    components: int = Field(6, ge=1)
    samples: int = Field(1_000_000, ge=10)
    max_iter: int = Field(500, ge=1)
    tol: float = Field(1e-6, gt=0)


class MCOptions(_Strict):
    draws: int = Field(1_000_000, ge=1000)


class ScenarioConfig(_Strict):
    main: ChannelConfig
    wiretap: ChannelConfig
    metric: Metric = "pnz"
    rate_threshold: float = Field(0.0, ge=0)
    backend: Backend = "analytic"
    seed: int = Field(0, ge=0)
    asc_method: Literal["cdf", "iterated"] = "cdf"
    quadrature: QuadratureOptions = Field(default_factory=QuadratureOptions)
    mg: MGOptions = Field(default_factory=MGOptions)
    mog: MoGOptions = Field(default_factory=MoGOptions)
    mc: MCOptions = Field(default_factory=MCOptions)

    _check_rate = field_validator("rate_threshold")(_finite)

    @model_validator(mode="after")
    def _check_backend(self):
        if self.backend == "mg":
            bad = [f"{side}.family: no MG recipe for {getattr(self, side).family.value}"
                   for side in ("main", "wiretap")
                   if getattr(self, side).family not in MG_FAMILIES]
            if bad:
                raise ValueError("; ".join(bad))
        return self


class SweepRange(_Strict):
    """Main-link mean SNR grid in dB; the wiretap mean stays fixed."""

    lo_db: float
    hi_db: float
    step_db: float = Field(gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if not (math.isfinite(self.lo_db) and math.isfinite(self.hi_db)):
            raise ValueError("lo_db and hi_db must be finite")
        if not self.lo_db < self.hi_db:
            raise ValueError(f"lo_db ({self.lo_db}) must be below hi_db ({self.hi_db})")
        return self

    def grid(self) -> list[float]:
        count = math.floor((self.hi_db - self.lo_db) / self.step_db + 1e-9) + 1
        return [self.lo_db + k * self.step_db for k in range(count)]


class SweepConfig(ScenarioConfig):
    sweep: SweepRange


class FoxHEvalConfig(_Strict):
    """Either raw Fox H parameters or a channel whose density row is used."""

    params: Optional[dict] = None
    channel: Optional[ChannelConfig] = None
    kind: Literal["h", "pdf", "cdf", "sf"] = "pdf"
    x: list[float] = Field(min_length=1)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.params is None) == (self.channel is None):
            raise ValueError("give exactly one of 'params' or 'channel'")
        if self.kind == "h" and self.params is None:
            raise ValueError("kind 'h' needs raw 'params'")
        if any(not math.isfinite(v) or v < 0 for v in self.x):
            raise ValueError("x: values must be finite and non-negative")
        return self

    def fox_h_params(self):
        from .channels import to_fox_h
        from .foxh import FoxHParams
        if self.channel is not None:
            return to_fox_h(self.channel.to_spec())
        try:
            return FoxHParams.from_json(self.params)
        except (KeyError, TypeError) as exc:
            raise SpecError(f"params: malformed Fox H parameters ({exc})") from None
