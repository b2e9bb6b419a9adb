"""Monte Carlo oracle for the secrecy metrics.

Draws are generated in fixed-size chunks.  Chunk k takes Bob's SNRs from the
Philox stream keyed (seed, 2k) and Eve's from (seed, 2k + 1), offset by a
per-metric group: the event probabilities (sop, pnz, sop bound) share their
pairs so that sop(R=0) = 1 - pnz holds exactly, while asc and esc use their
own streams.  Results do not depend on how chunks are spread over workers;
per-chunk sums are merged in chunk order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .metrics import METRICS, SecrecyScenario, secrecy_capacity

__all__ = ["McEstimate", "mc_metric", "stream_rng", "CHUNK"]

CHUNK = 1 << 17
_LN2 = math.log(2.0)
_STREAM_GROUP = {"sop": 0, "pnz": 0, "sop_lower_bound": 0, "asc": 1, "esc": 2}


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n: int
    seed: int

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("std_error must be non-negative")
        if self.n < 1:
            raise ValueError("n must be >= 1")


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator for sub-stream ``stream`` of ``seed``."""
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def _chunk_sums(scn, which, seed, k, size):
    base = (_STREAM_GROUP[which] << 40) + 2 * k
    gb = np.asarray(scn.main.sample(stream_rng(seed, base), size), dtype=float)
    ge = np.asarray(scn.wiretap.sample(stream_rng(seed, base + 1), size), dtype=float)
    rate = scn.rate_threshold
    if which == "sop":
        hit = secrecy_capacity(gb, ge) <= rate
    elif which == "pnz":
        hit = secrecy_capacity(gb, ge) > 0.0
    elif which == "sop_lower_bound":
        hit = gb <= 2.0 ** rate * ge
    elif which == "asc":
        cs = secrecy_capacity(gb, ge)
        return np.array([cs.sum(), (cs * cs).sum()])
    else:  # esc
        lb = np.log1p(gb) / _LN2
        le = np.log1p(ge) / _LN2
        return np.array([lb.sum(), le.sum(), (lb * lb).sum(), (le * le).sum(), (lb * le).sum()])
    return np.array([float(np.count_nonzero(hit))])


def mc_metric(scn: SecrecyScenario, which: str, n: int, seed: int = 0,
              workers: int = 1) -> McEstimate:
    """Estimate one metric from n independent (gamma_B, gamma_E) pairs.

    Probabilities get the binomial standard error, ASC the sample standard
    error and ESC a delta-method error on the difference of the two log means.
    """
    if which not in METRICS:
        raise ValueError(f"unknown metric {which!r}; expected one of {METRICS}")
    n = int(n)
    if n < 1000:
        raise ValueError("Monte Carlo needs at least 1000 draws")
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    jobs = list(enumerate(sizes))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _chunk_sums(scn, which, seed, *job), jobs))
    else:
        parts = [_chunk_sums(scn, which, seed, k, size) for k, size in jobs]
    total = np.zeros_like(parts[0])
    for part in parts:
        total = total + part

    if which in ("sop", "pnz", "sop_lower_bound"):
        p = total[0] / n
        se = math.sqrt(max(p * (1.0 - p), 0.0) / n)
        return McEstimate(float(p), se, n, seed)
    if which == "asc":
        mean = total[0] / n
        var = max(total[1] / n - mean * mean, 0.0) * n / (n - 1)
        return McEstimate(float(mean), math.sqrt(var / n), n, seed)
    mb, me = total[0] / n, total[1] / n
    vb = max(total[2] / n - mb * mb, 0.0)
    ve = max(total[3] / n - me * me, 0.0)
    cov = total[4] / n - mb * me
    # delta method on max(mean_B - mean_E, 0): slope 1 away from the kink
    var_diff = max(vb + ve - 2.0 * cov, 0.0) * n / (n - 1)
    diff = mb - me
    se = math.sqrt(var_diff / n)
    return McEstimate(float(max(diff, 0.0)), se, n, seed)
