"""Globally adaptive quadrature on [lower, inf) for vectorised integrands.

The half line is split at caller-supplied breakpoints (typically the mean
SNRs involved) into finite pieces plus a tail piece mapped to [0, 1) by
``x = base + scale * t / (1 - t)``.  Every interval carries a 15-point
Gauss-Legendre value for itself and for its two halves; the difference is the
error estimate.  Each round bisects the smallest set of worst intervals whose
combined error would bring the total under tolerance, and all new nodes are
evaluated in a single vectorised call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import AccuracyError

__all__ = ["QuadratureConfig", "QuadResult", "integrate"]

_ORDER = 15
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_ORDER)


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    transform: str = "rational"
    # cap on the number of inner integrals in iterated (double) quadrature
    max_inner: int = 20000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.transform != "rational":
            raise ValueError(f"unknown semi-infinite transform {self.transform!r}")


DEFAULT_CONFIG = QuadratureConfig()


class QuadResult(NamedTuple):
    value: float
    error: float
    intervals: int
    evaluations: int


class _Pieces:
    """Piecewise map from (piece, t in [0, 1]) to the integration variable."""

    def __init__(self, lower, breakpoints, scale):
        pts = sorted({float(b) for b in breakpoints if b > lower and math.isfinite(b)})
        edges = [float(lower)] + pts
        self.base = np.array(edges)
        widths = np.diff(edges).tolist()
        tail_scale = scale if scale is not None else (edges[-1] - lower if len(edges) > 1 else 1.0)
        if not tail_scale > 0:
            tail_scale = max(abs(edges[-1]), 1.0)
        self.width = np.array(widths + [float(tail_scale)])
        self.tail = len(edges) - 1

    def map(self, piece, t):
        base = self.base[piece]
        width = self.width[piece]
        tail = piece == self.tail
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            ratio = np.where(tail, t / (1.0 - t), t)
            jac = np.where(tail, width / (1.0 - t) ** 2, width)
        return base + width * ratio, jac


def _gl_batch(func, pieces, piece, lo, hi):
    """15-point Gauss-Legendre values over many (piece, [lo, hi]) intervals."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = mid[:, None] + half[:, None] * _GL_X[None, :]
    x, jac = pieces.map(np.broadcast_to(piece[:, None], t.shape), t)
    fx = np.asarray(func(x.ravel()), dtype=float).reshape(t.shape)
    with np.errstate(invalid="ignore"):
        contrib = np.where(jac > 0, fx * jac, 0.0)
    if not np.all(np.isfinite(contrib)):
        raise AccuracyError("integrand is not finite at a quadrature node")
    return half * (contrib @ _GL_W)


def _gl_with_halves(func, pieces, piece, lo, hi):
    mid = 0.5 * (lo + hi)
    k = piece.size
    vals = _gl_batch(func, pieces,
                     np.concatenate([piece, piece, piece]),
                     np.concatenate([lo, lo, mid]),
                     np.concatenate([hi, mid, hi]))
    whole, left, right = vals[:k], vals[k:2 * k], vals[2 * k:]
    return whole, left, right


def integrate(func: Callable, lower: float = 0.0, breakpoints: Sequence[float] = (),
              cfg: QuadratureConfig = DEFAULT_CONFIG, scale: float | None = None,
              initial: int = 4) -> QuadResult:
    """Integrate ``func`` over [lower, inf).

    ``func`` receives a 1-d float array and must return an array of the same
    size.  ``scale`` sets the tail map; by default it is the width of the
    finite part (or 1 when there are no breakpoints above ``lower``).
    """
    pieces = _Pieces(lower, breakpoints, scale)
    per = [initial] * pieces.tail + [2 * initial]
    piece = np.concatenate([np.full(c, i) for i, c in enumerate(per)])
    lo = np.concatenate([np.arange(c) / c for c in per])
    hi = np.concatenate([np.arange(1, c + 1) / c for c in per])

    whole, left, right = _gl_with_halves(func, pieces, piece, lo, hi)
    est = left + right
    err = np.abs(whole - est)
    # children's whole values are the current halves
    left_whole, right_whole = left, right
    evaluations = 3 * _ORDER * piece.size
    subdivisions = 0
    while True:
        total = float(est.sum())
        total_err = float(err.sum())
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(total))
        if total_err <= tol:
            return QuadResult(total, total_err, int(piece.size), evaluations)
        order = np.argsort(-err, kind="stable")
        excess = total_err - 0.5 * tol
        csum = np.cumsum(err[order])
        count = int(np.searchsorted(csum, excess) + 1)
        pick = order[:min(count, order.size)]
        subdivisions += pick.size
        if subdivisions > cfg.max_subdivisions:
            raise AccuracyError(
                f"quadrature did not converge within {cfg.max_subdivisions} subdivisions "
                f"(estimate {total:.12g}, error bound {total_err:.3g})",
                estimate=total, bound=total_err)
        keep = np.ones(piece.size, dtype=bool)
        keep[pick] = False
        p_piece, p_lo, p_hi = piece[pick], lo[pick], hi[pick]
        p_mid = 0.5 * (p_lo + p_hi)
        c_piece = np.concatenate([p_piece, p_piece])
        c_lo = np.concatenate([p_lo, p_mid])
        c_hi = np.concatenate([p_mid, p_hi])
        c_whole = np.concatenate([left_whole[pick], right_whole[pick]])
        c_mid = 0.5 * (c_lo + c_hi)
        vals = _gl_batch(func, pieces,
                         np.concatenate([c_piece, c_piece]),
                         np.concatenate([c_lo, c_mid]),
                         np.concatenate([c_mid, c_hi]))
        evaluations += _ORDER * vals.size
        k = c_piece.size
        c_left, c_right = vals[:k], vals[k:]
        c_est = c_left + c_right
        c_err = np.abs(c_whole - c_est)
        piece = np.concatenate([piece[keep], c_piece])
        lo = np.concatenate([lo[keep], c_lo])
        hi = np.concatenate([hi[keep], c_hi])
        est = np.concatenate([est[keep], c_est])
        err = np.concatenate([err[keep], c_err])
        left_whole = np.concatenate([left_whole[keep], c_left])
        right_whole = np.concatenate([right_whole[keep], c_right])
