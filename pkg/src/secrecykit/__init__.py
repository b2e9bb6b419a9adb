"""Secrecy metrics (SOP, PNZ, ASC, ergodic secrecy capacity) over independent
main and wiretap fading channels, with Mixture Gamma, Mixture of Gaussian,
Fox H and Monte Carlo backends."""

__version__ = "0.1.0"

from .channels import AnalyticChannel, ChannelSpec, Family, fox_h_channel, sample, to_fox_h
from .errors import (AccuracyError, DivergenceError, PoleError, SecrecyError, SpecError,
                     UnsupportedFamilyError)
from .foxh import ContourPlan, FoxHChannel, FoxHParams, fox_h, foxh_cdf, foxh_pdf, foxh_sf
from .metrics import (SecrecyScenario, asc, esc, evaluate, pnz, secrecy_capacity, sop,
                      sop_lower_bound)
from .mixtures import (MGModel, MoGModel, fit_mog, mg_cdf, mg_from_channel, mg_pdf, mog_cdf,
                       mog_pdf)
from .montecarlo import McEstimate, mc_metric
from .quadrature import QuadratureConfig

__all__ = [
    "AccuracyError", "AnalyticChannel", "ChannelSpec", "ContourPlan", "DivergenceError", "Family",
    "FoxHChannel", "FoxHParams", "MGModel", "McEstimate", "MoGModel", "PoleError",
    "QuadratureConfig", "SecrecyError", "SecrecyScenario", "SpecError", "UnsupportedFamilyError",
    "asc", "esc", "evaluate", "fit_mog", "fox_h", "fox_h_channel", "foxh_cdf", "foxh_pdf",
    "foxh_sf", "mc_metric", "mg_cdf", "mg_from_channel", "mg_pdf", "mog_cdf", "mog_pdf", "pnz",
    "sample", "secrecy_capacity", "sop", "sop_lower_bound", "to_fox_h",
]
