"""Univariate Fox H-function and the Fox H SNR distribution.

The H-function is evaluated directly from its Mellin-Barnes integral

    H(x) = 1/(2 pi i) * Int_{c - i inf}^{c + i inf} Theta(s) x^(-s) ds

with

    Theta(s) = prod_{j<=m} G(b_j + B_j s) prod_{i<=n} G(1 - a_i - A_i s)
               / (prod_{j>m} G(1 - b_j - B_j s) prod_{i>n} G(a_i + A_i s)),

on a vertical line Re(s) = c separating the two pole families.  For real
parameters and x > 0 the integrand is conjugate-symmetric in Im(s), so only
the upper half line is integrated.  The trapezoid rule on that line converges
geometrically because the integrand is analytic in a strip around the contour;
step and height are refined until both the discretisation and truncation
estimates fall below tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .errors import AccuracyError, DivergenceError, PoleError, SpecError

__all__ = [
    "FoxHParams",
    "ContourPlan",
    "log_gamma_complex",
    "fox_h",
    "foxh_pdf",
    "foxh_cdf",
    "foxh_sf",
    "FoxHChannel",
]

# Lanczos approximation, g = 7, nine terms.
_LANCZOS_G = 7.0
_LANCZOS_P = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_2PI = math.log(2.0 * math.pi)


def _lgamma_right(z):
    # valid for Re(z) >= 0.5
    z = z - 1.0
    acc = _LANCZOS_P[0] + 0.0 * z
    for k in range(1, len(_LANCZOS_P)):
        acc = acc + _LANCZOS_P[k] / (z + k)
    t = z + (_LANCZOS_G + 0.5)
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def _lgamma(z):
    """Vectorised log-gamma on the standard branch; +inf at the poles."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    right = z.real >= 0.5
    if right.any():
        out[right] = _lgamma_right(z[right])
    left = ~right
    if left.any():
        zl = z[left]
        upper = zl.imag >= 0.0
        w = np.where(upper, zl, np.conj(zl))
        with np.errstate(divide="ignore", invalid="ignore"):
            # log G(w) = log 2pi + i pi (w - 1/2) - log(1 - e^{2 pi i w}) - log G(1 - w),
            # stable for Im(w) >= 0 and on the branch continuous from Re(w) > 0.
            v = (_LOG_2PI + 1j * np.pi * (w - 0.5)
                 - np.log1p(-np.exp(2j * np.pi * w)) - _lgamma_right(1.0 - w))
        v = np.where(np.isfinite(v.real), v, np.inf + 0j)
        out[left] = np.where(upper, v, np.conj(v))
    return out


def log_gamma_complex(z):
    """Principal branch of log Gamma(z) for complex ``z``.

    Uses the Lanczos approximation for Re(z) >= 1/2 and the reflection
    formula otherwise.  The imaginary part is continuous away from the
    negative real axis and agrees with ``mpmath.loggamma``.

    Raises:
        PoleError: if any element of ``z`` is a non-positive integer.
    """
    arr = np.asarray(z, dtype=complex)
    bad = (arr.imag == 0.0) & (arr.real <= 0.0) & (arr.real == np.round(arr.real))
    if bad.any():
        raise PoleError(f"log-gamma pole at {arr[bad].ravel()[0].real:g}")
    out = _lgamma(arr)
    return complex(out) if out.ndim == 0 else out


def _as_tuple(values) -> tuple:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class FoxHParams:
    """Parameters of a Fox H-function distribution.

    ``pdf(g) = K * H^{m,n}_{p,q}[C g | (a_i, A_i); (b_j, B_j)]``.  When used as
    a bare kernel (``fox_h``) the normaliser ``K`` and scale ``C`` are ignored.
    """

    m: int
    n: int
    a: tuple = ()
    A: tuple = ()
    b: tuple = ()
    B: tuple = ()
    K: float = 1.0
    C: float = 1.0

    def __post_init__(self):
        for name in ("a", "A", "b", "B"):
            object.__setattr__(self, name, _as_tuple(getattr(self, name)))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "K", float(self.K))
        object.__setattr__(self, "C", float(self.C))
        p, q = self.p, self.q
        if len(self.A) != p:
            raise SpecError(f"len(a)={p} but len(A)={len(self.A)}")
        if len(self.B) != q:
            raise SpecError(f"len(b)={q} but len(B)={len(self.B)}")
        if not (0 <= self.m <= q and 0 <= self.n <= p):
            raise SpecError(f"orders need 0<=m<=q and 0<=n<=p, got m={self.m} n={self.n} p={p} q={q}")
        if any(v <= 0 for v in self.A + self.B):
            raise SpecError("all A_i and B_j must be positive")
        if not self.K > 0:
            raise SpecError(f"K must be positive, got {self.K}")
        if self.C <= 0:
            # a negative scale would put the argument off the positive axis
            raise SpecError(f"C must be positive, got {self.C}")

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)

    @property
    def mu_star(self) -> float:
        m, n = self.m, self.n
        return (sum(self.B[:m]) - sum(self.B[m:])
                + sum(self.A[:n]) - sum(self.A[n:]))

    def strip(self) -> tuple[float, float]:
        """Open interval of Re(s) separating the two pole families."""
        lo = max((-bj / Bj for bj, Bj in zip(self.b[:self.m], self.B[:self.m])), default=-math.inf)
        hi = min(((1.0 - ai) / Ai for ai, Ai in zip(self.a[:self.n], self.A[:self.n])), default=math.inf)
        return lo, hi

    def pole_spacing(self) -> float:
        steps = [1.0 / v for v in self.B[:self.m] + self.A[:self.n]]
        return min(steps) if steps else 1.0

    def cdf_kernel(self) -> "FoxHParams":
        """Kernel whose H-function times K/C is the CDF.

        Orders become (m, n+1; p+1, q+1) with upper list (1,1),(a_i+A_i, A_i)
        and lower list (b_j+B_j, B_j),(0,1).
        """
        return FoxHParams(
            m=self.m,
            n=self.n + 1,
            a=(1.0,) + tuple(ai + Ai for ai, Ai in zip(self.a, self.A)),
            A=(1.0,) + self.A,
            b=tuple(bj + Bj for bj, Bj in zip(self.b, self.B)) + (0.0,),
            B=self.B + (1.0,),
            K=self.K / self.C,
            C=self.C,
        )

    def sf_kernel(self) -> "FoxHParams":
        """Kernel whose H-function times K/C is the survival function 1 - F.

        Orders become (m+1, n; p+1, q+1) with upper list (a_i+A_i, A_i),(1,1)
        and lower list (0,1),(b_j+B_j, B_j).
        """
        return FoxHParams(
            m=self.m + 1,
            n=self.n,
            a=tuple(ai + Ai for ai, Ai in zip(self.a, self.A)) + (1.0,),
            A=self.A + (1.0,),
            b=(0.0,) + tuple(bj + Bj for bj, Bj in zip(self.b, self.B)),
            B=(1.0,) + self.B,
            K=self.K / self.C,
            C=self.C,
        )

    def log_theta(self, s):
        """log Theta(s) for complex ``s`` (array)."""
        s = np.asarray(s, dtype=complex)
        m, n = self.m, self.n
        acc = np.zeros_like(s)
        for bj, Bj in zip(self.b[:m], self.B[:m]):
            acc += _lgamma(bj + Bj * s)
        for ai, Ai in zip(self.a[:n], self.A[:n]):
            acc += _lgamma(1.0 - ai - Ai * s)
        for bj, Bj in zip(self.b[m:], self.B[m:]):
            acc -= _lgamma(1.0 - bj - Bj * s)
        for ai, Ai in zip(self.a[n:], self.A[n:]):
            acc -= _lgamma(ai + Ai * s)
        return acc

    def _real_derivatives(self, c):
        """First and second derivatives of log Theta on the real axis."""
        m, n = self.m, self.n
        d1 = np.zeros_like(c)
        d2 = np.zeros_like(c)
        for bj, Bj in zip(self.b[:m], self.B[:m]):
            d1 += Bj * special.digamma(bj + Bj * c)
            d2 += Bj * Bj * special.polygamma(1, bj + Bj * c)
        for ai, Ai in zip(self.a[:n], self.A[:n]):
            d1 -= Ai * special.digamma(1.0 - ai - Ai * c)
            d2 += Ai * Ai * special.polygamma(1, 1.0 - ai - Ai * c)
        for bj, Bj in zip(self.b[m:], self.B[m:]):
            d1 += Bj * special.digamma(1.0 - bj - Bj * c)
            d2 -= Bj * Bj * special.polygamma(1, 1.0 - bj - Bj * c)
        for ai, Ai in zip(self.a[n:], self.A[n:]):
            d1 -= Ai * special.digamma(ai + Ai * c)
            d2 -= Ai * Ai * special.polygamma(1, ai + Ai * c)
        return d1, d2

    def to_json(self) -> dict:
        return {"K": self.K, "C": self.C, "m": self.m, "n": self.n,
                "a": list(self.a), "A": list(self.A), "b": list(self.b), "B": list(self.B)}

    @classmethod
    def from_json(cls, obj: dict) -> "FoxHParams":
        allowed = {"K", "C", "m", "n", "p", "q", "a", "A", "b", "B"}
        extra = set(obj) - allowed
        if extra:
            raise SpecError(f"unknown Fox H fields: {sorted(extra)}")
        params = cls(m=obj["m"], n=obj["n"], a=obj.get("a", ()), A=obj.get("A", ()),
                     b=obj.get("b", ()), B=obj.get("B", ()),
                     K=obj.get("K", 1.0), C=obj.get("C", 1.0))
        for key, actual in (("p", params.p), ("q", params.q)):
            if key in obj and int(obj[key]) != actual:
                raise SpecError(f"{key}={obj[key]} disagrees with parameter list length {actual}")
        return params


@dataclass(frozen=True)
class ContourPlan:
    """Controls for the vertical-line quadrature.

    Any field left as ``None`` is chosen automatically per argument: the
    abscissa ``c`` at the saddle point of |Theta(c) x^-c| clamped to the pole
    gap, the half-height from the integrand width, and the node count from the
    distance to the nearest pole.  ``margin`` is the minimum pole clearance as a
    fraction of the pole spacing.
    """

    c: Optional[float] = None
    height: Optional[float] = None
    nodes: Optional[int] = None
    margin: float = 0.3
    rtol: float = 1e-13
    tail_rtol: float = 1e-12
    max_nodes: int = 1 << 16

    def __post_init__(self):
        if self.height is not None and not self.height > 0:
            raise ValueError("height must be positive")
        if self.nodes is not None and not self.nodes > 0:
            raise ValueError("nodes must be positive")
        if not 0 < self.margin < 0.5:
            raise ValueError("margin must lie in (0, 0.5)")


_DEFAULT_PLAN = ContourPlan()
_UNDERFLOW_LOG = -760.0


def _check_convergent(params: FoxHParams):
    if not params.mu_star > 0:
        raise DivergenceError(
            f"Mellin-Barnes integral diverges on vertical contours (mu*={params.mu_star:g} <= 0)")
    lo, hi = params.strip()
    if not lo < hi:
        raise DivergenceError(
            f"pole families overlap (rightmost left pole {lo:g} >= leftmost right pole {hi:g})")
    return lo, hi


def _saddle_abscissa(params, logx, lo, hi):
    """Minimiser of log|Theta(c)| - c log x over [lo, hi], per argument."""
    c_lo = np.full_like(logx, lo)
    g_lo = params._real_derivatives(c_lo)[0] - logx
    if math.isfinite(hi):
        c_hi = np.full_like(logx, hi)
    else:
        c_hi = c_lo + 1.0
        for _ in range(80):
            g_hi = params._real_derivatives(c_hi)[0] - logx
            grow = g_hi < 0
            if not grow.any():
                break
            c_hi = np.where(grow, lo + 2.0 * (c_hi - lo), c_hi)
    g_hi = params._real_derivatives(c_hi)[0] - logx
    a, b = c_lo.copy(), c_hi.copy()
    for _ in range(60):
        mid = 0.5 * (a + b)
        g = params._real_derivatives(mid)[0] - logx
        left = g > 0
        b = np.where(left, mid, b)
        a = np.where(left, a, mid)
    c = 0.5 * (a + b)
    c = np.where(g_lo >= 0, c_lo, c)
    c = np.where(g_hi <= 0, c_hi, c)
    return c


def _trapezoid_rows(params, logx, c, h, nodes):
    """Half-line trapezoid sums for rows sharing the node count."""
    k = np.arange(nodes + 1)
    t = h[:, None] * k[None, :]
    s = c[:, None] + 1j * t
    log_f = params.log_theta(s) - s * logx[:, None]
    ref = log_f[:, 0].real
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        f = np.exp(log_f - ref[:, None])
    f = np.where(np.isfinite(f), f, 0.0)
    f[:, 0] *= 0.5
    scale = h / math.pi
    total = scale * f.sum(axis=1).real
    coarse = 2.0 * scale * f[:, ::2].sum(axis=1).real
    mag = np.abs(f)
    l1 = scale * mag.sum(axis=1)
    panel = max(1, nodes // 8)
    tail = scale * mag[:, -panel:].sum(axis=1)
    return total, np.abs(total - coarse), tail, l1, ref


def _evaluate(params: FoxHParams, x, plan: ContourPlan):
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    if np.any(~(x > 0)):
        raise ValueError("Fox H argument must be positive")
    lo, hi = _check_convergent(params)
    logx = np.log(x)
    spacing = params.pole_spacing()
    delta = plan.margin * spacing
    if math.isfinite(hi) and math.isfinite(lo):
        delta = min(delta, 0.5 * (hi - lo))
    lo_c = lo + delta if math.isfinite(lo) else (hi - delta - 8.0 * spacing)
    hi_c = hi - delta

    if plan.c is not None:
        if not lo < plan.c < hi:
            raise ValueError(f"contour abscissa {plan.c} outside pole gap ({lo}, {hi})")
        c = np.full_like(x, plan.c)
    else:
        c = _saddle_abscissa(params, logx, lo_c, hi_c)

    dist = np.minimum(c - lo, hi - c)
    curv = params._real_derivatives(c)[1]
    width = np.where(curv > 0, 1.0 / np.sqrt(np.where(curv > 0, curv, 1.0)), 1.0)
    if plan.height is not None:
        height = np.full_like(x, plan.height)
    else:
        height = np.maximum(8.0 * width, 24.0 / params.mu_star)
    if plan.nodes is not None:
        step = height / plan.nodes
    else:
        step = np.minimum(0.5 * width, dist / 4.0)

    values = np.zeros_like(x)
    errors = np.zeros_like(x)
    # |H(x)| <= exp(peak) * L1 of the normalised integrand; rows far below the
    # double range are exact zeros in floating point.
    peak = (params.log_theta(c + 0j) - c * logx).real
    active = np.flatnonzero(peak > _UNDERFLOW_LOG)
    while active.size:
        nodes = np.ceil(height[active] / step[active]).astype(np.int64)
        nodes = np.maximum(1 << np.ceil(np.log2(np.maximum(nodes, 8))).astype(np.int64), 8)
        if np.any(nodes > plan.max_nodes):
            bad = active[nodes > plan.max_nodes][0]
            raise AccuracyError(
                f"Fox H contour needs more than {plan.max_nodes} nodes at x={x[bad]:.6g}",
                estimate=None, bound=float(errors[bad]) if np.isfinite(errors[bad]) else None)
        step[active] = height[active] / nodes
        still = []
        for count in np.unique(nodes):
            rows = active[nodes == count]
            total, disc, tail, l1, ref = _trapezoid_rows(
                params, logx[rows], c[rows], step[rows], int(count))
            # geometric convergence: err(h) ~ err(2h)^2 / scale, and
            # disc = |S_h - S_2h| is essentially err(2h)
            est = disc * disc / np.where(l1 > 0, l1, 1.0)
            bad_disc = est > plan.rtol * l1
            bad_tail = tail > plan.tail_rtol * l1
            with np.errstate(over="ignore", under="ignore"):
                factor = np.exp(ref)
            values[rows] = factor * total
            errors[rows] = factor * (est + tail + 1e-16 * count * l1)
            step[rows[bad_disc]] *= 0.5
            height[rows[bad_tail]] *= 2.0
            still.append(rows[bad_disc | bad_tail])
        active = np.concatenate(still) if still else np.array([], dtype=int)
    return values.reshape(shape), errors.reshape(shape)


def fox_h(params: FoxHParams, x, plan: Optional[ContourPlan] = None, full_output: bool = False):
    """Evaluate H^{m,n}_{p,q}[x] (K and C of ``params`` are ignored).

    With ``full_output`` returns ``(value, error_estimate)``.
    """
    values, errors = _evaluate(params, x, plan or _DEFAULT_PLAN)
    if np.ndim(x) == 0:
        values, errors = float(values), float(errors)
    return (values, errors) if full_output else values


def foxh_pdf(params: FoxHParams, gamma, plan: Optional[ContourPlan] = None):
    """Density K * H[C gamma]; zero for gamma < 0 is not defined, gamma must be >= 0."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be non-negative")
    arg = np.maximum(params.C * g, np.finfo(float).tiny)
    out = params.K * _evaluate(params, arg, plan or _DEFAULT_PLAN)[0]
    return float(out) if out.ndim == 0 else out


_CLAMP_SILENT = 1e-8
_CLAMP_FATAL = 1e-6


def _cdf_and_sf(params: FoxHParams, g, plan):
    """CDF and survival function, each computed from the better-conditioned side.

    Below the median-ish point the CDF kernel is integrated directly; above it
    the survival kernel is, and the other quantity follows by complement.
    """
    cdf_k = params.cdf_kernel()
    sf_k = params.sf_kernel()
    cdf = np.zeros_like(g)
    sf = np.ones_like(g)
    pos = g > 0
    if not pos.any():
        return cdf, sf
    x = params.C * g[pos]
    # the CDF contour must stay left of the pole at 0; when the saddle of
    # the CDF integrand lies beyond it the survival side is the stable one
    _, hi = cdf_k.strip()
    edge = np.full_like(x, min(hi, 0.0) - plan.margin * cdf_k.pole_spacing())
    upper = cdf_k._real_derivatives(edge)[0] - np.log(x) < 0
    c_pos = np.zeros_like(x)
    s_pos = np.ones_like(x)
    if (~upper).any():
        c_pos[~upper] = cdf_k.K * _evaluate(cdf_k, x[~upper], plan)[0]
        s_pos[~upper] = 1.0 - c_pos[~upper]
    if upper.any():
        s_pos[upper] = sf_k.K * _evaluate(sf_k, x[upper], plan)[0]
        c_pos[upper] = 1.0 - s_pos[upper]
    cdf[pos], sf[pos] = c_pos, s_pos
    return cdf, sf


def _clamp_probability(out):
    over = np.maximum(out - 1.0, -out)
    if np.any(over > _CLAMP_FATAL):
        worst = float(np.max(over))
        raise AccuracyError(f"Fox H probability left [0, 1] by {worst:.3g}", estimate=None, bound=worst)
    small = (over > 0) & (over < _CLAMP_SILENT)
    out = np.where(small, np.clip(out, 0.0, 1.0), out)
    return float(out) if out.ndim == 0 else out


def foxh_cdf(params: FoxHParams, gamma, plan: Optional[ContourPlan] = None):
    """CDF (K/C) * H^{m,n+1}_{p+1,q+1}[C gamma | shifted parameters].

    In the upper tail the value is taken as 1 minus the survival kernel.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be non-negative")
    return _clamp_probability(_cdf_and_sf(params, g, plan or _DEFAULT_PLAN)[0])


def foxh_sf(params: FoxHParams, gamma, plan: Optional[ContourPlan] = None):
    """Survival function 1 - F, accurate in the upper tail."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be non-negative")
    return _clamp_probability(_cdf_and_sf(params, g, plan or _DEFAULT_PLAN)[1])


@dataclass(frozen=True)
class FoxHChannel:
    """Channel model backed by a Fox H distribution.

    ``spec`` (a ChannelSpec) is optional; it supplies the exact sampler and
    the nominal mean SNR when present.
    """

    params: FoxHParams
    spec: object = None
    plan: ContourPlan = field(default=_DEFAULT_PLAN)
    atom: float = 0.0

    def pdf(self, gamma):
        return foxh_pdf(self.params, gamma, self.plan)

    def cdf(self, gamma):
        return foxh_cdf(self.params, gamma, self.plan)

    def sf(self, gamma):
        return foxh_sf(self.params, gamma, self.plan)

    def mean_snr(self) -> float:
        """E[gamma] = K/C^2 * Theta(2) from the Mellin transform at s = 2."""
        val = self.params.log_theta(np.array([2.0 + 0j]))[0]
        return float(self.params.K / self.params.C ** 2 * np.exp(val).real)

    def sample(self, rng, size=None):
        if self.spec is None:
            raise NotImplementedError("Fox H model without a channel spec has no sampler")
        from .channels import sample
        return sample(self.spec, rng, size)

    def with_plan(self, plan: ContourPlan) -> "FoxHChannel":
        return replace(self, plan=plan)
