"""Prime-sum statistics of a_p and growth-exponent fitting.

    F_{m,s}(E, N) = (1/N) * sum_{p <= N} a_p^m log p / p^(s/2)

with F_new = F_{1,1}.  Summands are rounded onto a fixed binary grid of
``FIXED_BITS`` fractional bits and accumulated as Python integers, so the sum
is exact (and independent of summation order) up to that rounding; the grid
is far finer than the 128-bit working precision the values are reported at.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .curve import Curve
from .errors import AllSamplesDegenerate, DegenerateSchedule, InsufficientSeries
from .modp import ApSeries, ap_series

FIXED_BITS = 160
WORK_PREC = FIXED_BITS + 64
ZERO_FLOOR = 1e-12
NORMALIZATIONS = ("paper", "none")

_weight_cache: Dict[Tuple[int, Fraction], mpmath.mpf] = {}


@dataclass(frozen=True)
class FSample:
    bound: int
    value: mpmath.mpf
    m: int = 1
    s: float = 1.0
    normalization: str = "paper"
    fixed_sum: int = field(default=0, compare=False, repr=False)

    def row(self):
        n = self.bound
        with mpmath.workprec(WORK_PREC):
            logn = mpmath.log(n)
            loglogn = mpmath.log(logn)
        return (n, self.value, logn, loglogn)


@dataclass(frozen=True)
class GrowthFit:
    logC: float
    rhat: float
    stderr: float
    r2: float
    points_used: int
    excluded: int = 0

    def to_json(self) -> dict:
        from .tables import jsonable
        return jsonable({"logC": self.logC, "rhat": self.rhat,
                         "stderr": self.stderr, "r2": self.r2,
                         "points_used": self.points_used,
                         "excluded": self.excluded})


def _weight(p: int, s: Fraction) -> mpmath.mpf:
    key = (p, s)
    w = _weight_cache.get(key)
    if w is None:
        with mpmath.workprec(WORK_PREC):
            if s == 1:
                den = mpmath.sqrt(p)
            else:
                den = mpmath.power(p, mpmath.mpf(s.numerator) / (2 * s.denominator))
            w = mpmath.log(p) / den
        _weight_cache[key] = w
    return w


def _fixed_terms(series: ApSeries, n: int, m: int, s) -> List[int]:
    s = Fraction(s).limit_denominator(10 ** 12) if not isinstance(s, Fraction) else s
    scale = mpmath.mpf(2) ** FIXED_BITS
    out = []
    with mpmath.workprec(WORK_PREC):
        for e in series.entries:
            if e.p > n:
                break
            coeff = e.ap ** m
            if coeff == 0:
                out.append(0)
                continue
            out.append(int(mpmath.nint(coeff * _weight(e.p, s) * scale)))
    return out


def _check(series: ApSeries, n: int, normalization: str):
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    if n < 1:
        raise ValueError("bound must be >= 1")
    if series.bound < n:
        raise InsufficientSeries(f"series covers p <= {series.bound}, need {n}")


def _finish(total: int, n: int, normalization: str) -> mpmath.mpf:
    with mpmath.workprec(WORK_PREC):
        v = mpmath.ldexp(mpmath.mpf(total), -FIXED_BITS)
        if normalization == "paper":
            v = v / n
    return v


def f_ms(series: ApSeries, m: int, s, n: int, normalization: str = "paper") -> FSample:
    """F_{m,s}(E, n) from a precomputed a_p series (real ``s`` only)."""
    if m < 0:
        raise ValueError("moment m must be nonnegative")
    _check(series, n, normalization)
    total = sum(_fixed_terms(series, n, m, s))
    return FSample(n, _finish(total, n, normalization), m, float(s),
                   normalization, total)


def f_new(series: ApSeries, n: int, normalization: str = "paper") -> FSample:
    return f_ms(series, 1, 1, n, normalization)


def f_ms_many(series: ApSeries, m: int, s, bounds: Sequence[int],
              normalization: str = "paper") -> List[FSample]:
    """Evaluate at several bounds with one ascending pass over the primes."""
    bounds = sorted(bounds)
    for b in bounds:
        _check(series, b, normalization)
    terms = _fixed_terms(series, bounds[-1], m, s)
    primes = series.primes
    out = []
    total = 0
    i = 0
    for b in bounds:
        while i < len(terms) and primes[i] <= b:
            total += terms[i]
            i += 1
        out.append(FSample(b, _finish(total, b, normalization), m, float(s),
                           normalization, total))
    return out


def schedule(n0: int, alpha, k: int) -> List[int]:
    """Geometric bounds ``round(n0 * alpha**i)``, i < k, rounding half up."""
    if n0 < 2 or k < 1:
        raise ValueError("need n0 >= 2 and k >= 1")
    a = Fraction(repr(alpha)) if isinstance(alpha, float) else Fraction(alpha)
    if a <= 1:
        raise ValueError("alpha must exceed 1")
    out = []
    for i in range(k):
        v = n0 * a ** i
        b = math.floor(v + Fraction(1, 2))
        if not out or b > out[-1]:
            out.append(b)
    if len(out) < 2:
        raise DegenerateSchedule(f"schedule({n0}, {alpha}, {k}) has < 2 distinct bounds")
    return out


def fit_growth(samples: Sequence[FSample], zero_floor: float = ZERO_FLOOR) -> GrowthFit:
    """Least squares of log|F| on log log N; returns the fitted exponent."""
    if any(s.bound < 3 for s in samples):
        raise ValueError("bounds must be >= 3 so that log log N > 0")
    if len({s.bound for s in samples}) != len(samples):
        raise ValueError("sample bounds must be distinct")
    xs, ys = [], []
    excluded = 0
    for smp in samples:
        v = abs(mpmath.mpf(smp.value))
        if v < zero_floor:
            excluded += 1
            continue
        xs.append(math.log(math.log(smp.bound)))
        ys.append(float(mpmath.log(v)))
    if len(xs) < 2:
        raise AllSamplesDegenerate(f"only {len(xs)} usable samples")
    x = np.array(xs)
    y = np.array(ys)
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    icpt = float(ym - slope * xm)
    resid = y - (icpt + slope * x)
    ssr = float((resid ** 2).sum())
    sst = float(((y - ym) ** 2).sum())
    dof = len(xs) - 2
    stderr = math.sqrt(ssr / dof / sxx) if dof > 0 else math.inf
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    return GrowthFit(icpt, slope, stderr, r2, len(xs), excluded)


def rank_from_fit(fit: GrowthFit, m: int = 1) -> int:
    """``max(0, round(rhat / m))``: F_{m,s} is expected to grow like (log N)^(r m)."""
    if m < 1:
        raise ValueError("rank estimation needs a positive moment")
    return max(0, math.floor(fit.rhat / m + 0.5))


@dataclass
class RankEstimate:
    rank: int
    fit: GrowthFit
    samples: List[FSample]
    series_bound: int

    def table(self):
        return [s.row() for s in self.samples]

    def diagnostics(self) -> dict:
        return {"rank_estimate": self.rank, "series_bound": self.series_bound,
                "fit": self.fit.to_json(),
                "table": [list(r) for r in self.table()]}


def estimate_rank(c: Curve, n0: int = 1000, alpha=10, k: int = 4, m: int = 1,
                  s=1, normalization: str = "paper", workers: int = 1,
                  series: Optional[ApSeries] = None) -> RankEstimate:
    bounds = schedule(n0, alpha, k)
    if series is None or series.bound < bounds[-1]:
        series = ap_series(c, bounds[-1], workers)
    samples = f_ms_many(series, m, s, bounds, normalization)
    fit = fit_growth(samples)
    return RankEstimate(rank_from_fit(fit, m), fit, samples, bounds[-1])
