"""Reduction modulo primes: sieving, point counts and traces of Frobenius.

Good primes are handled by a Legendre-symbol sum for small p and by
Shanks-Mestre baby-step/giant-step for larger p (falling back to the sum if
the group structure leaves the count ambiguous).  Bad primes get the usual
0 / +1 / -1 value for additive / split / nonsplit reduction.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import gcd, isqrt
from typing import List, Sequence

import numpy as np
import sympy

from .curve import Curve
from .errors import BadReduction, GoodReduction

#: Primes below this use the vectorised Legendre sum; above, BSGS.
BSGS_THRESHOLD = 1500

REDUCTION_TYPES = ("good", "additive", "split", "nonsplit")


# -- primes -----------------------------------------------------------------

def primes_up_to(n: int) -> List[int]:
    """All primes ``<= n`` in ascending order (sieve of Eratosthenes)."""
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for i in range(3, isqrt(n) + 1, 2):
        if sieve[i]:
            sieve[i * i::2 * i] = False
    return np.flatnonzero(sieve).tolist()


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) for an odd prime p, via Euler's criterion."""
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def _square_indicator(p: int) -> np.ndarray:
    """chi[t] = 1 + (t/p): the number of square roots of t mod p."""
    ys = np.arange(p, dtype=np.int64)
    counts = np.bincount((ys * ys) % p, minlength=p)
    return counts


# -- reduction of the integral model -----------------------------------------

def _bs_mod(c: Curve, p: int):
    a1, a2, a3, a4, a6 = c.integral_ainvs
    b2 = a1 * a1 + 4 * a2
    b4 = a1 * a3 + 2 * a4
    b6 = a3 * a3 + 4 * a6
    return b2 % p, b4 % p, b6 % p


def bad_primes(c: Curve) -> List[int]:
    """Primes dividing the discriminant of the integral (u-scaled) model."""
    return sorted(q for q in sympy.factorint(abs(c.integral_disc)) if q > 1)


def is_bad(c: Curve, p: int) -> bool:
    return c.integral_disc % p == 0


def _count_by_enumeration(c: Curve, p: int, smooth_only: bool = False) -> int:
    """Projective point count of the reduced long model by walking F_p^2."""
    a1, a2, a3, a4, a6 = (a % p for a in c.integral_ainvs)
    n = 1  # point at infinity, always smooth
    for x in range(p):
        rhs = (((x + a2) * x + a4) * x + a6) % p
        for y in range(p):
            if (y * y + a1 * x * y + a3 * y - rhs) % p:
                continue
            if smooth_only:
                fx = (a1 * y - 3 * x * x - 2 * a2 * x - a4) % p
                fy = (2 * y + a1 * x + a3) % p
                if fx == 0 and fy == 0:
                    continue
            n += 1
    return n


def _count_legendre(c: Curve, p: int) -> int:
    """#E~(F_p) for odd p, singular point included when present.

    Completing the square turns the long model into
    (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6.
    """
    b2, b4, b6 = _bs_mod(c, p)
    x = np.arange(p, dtype=np.int64)
    f = (4 * x + b2) % p
    f = (f * x + 2 * b4) % p
    f = (f * x + b6) % p
    chi = _square_indicator(p)
    return 1 + int(chi[f].sum())


# -- Shanks-Mestre ------------------------------------------------------------

def _ec_add(P, Q, a, p):
    """Affine addition on y^2 = x^3 + a x + b over F_p; None is the identity."""
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return x3, (lam * (x1 - x3) - y1) % p


def _ec_mul(n, P, a, p):
    R = None
    while n:
        if n & 1:
            R = _ec_add(R, P, a, p)
        n >>= 1
        if n:
            P = _ec_add(P, P, a, p)
    return R


def _small_factors(n: int) -> List[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


def _point_order(P, a, p, lo, hi) -> int:
    """Exact order of P, which must have a multiple in [lo, hi]."""
    width = hi - lo + 1
    s = isqrt(width) + 1
    baby = {}
    R = None
    for j in range(0, s + 1):
        if R is None and j > 0:
            return _reduce_order(j, P, a, p)
        if R is not None:
            baby.setdefault(R[0], (j, R[1]))
        R = _ec_add(R, P, a, p)
    step = 2 * s + 1
    # R is now (s+1)P, so step*P = 2R - P
    stepP = _ec_add(_ec_add(R, R, a, p), (P[0], -P[1] % p), a, p)
    m = lo + s
    G = _ec_mul(m, P, a, p)
    while m - s <= hi:
        if G is None:
            return _reduce_order(m, P, a, p)
        hit = baby.get(G[0])
        if hit is not None:
            j, y = hit
            mult = m - j if y == G[1] else m + j
            return _reduce_order(mult, P, a, p)
        G = _ec_add(G, stepP, a, p)
        m += step
    raise ArithmeticError("no multiple of the point order in the Hasse interval")


def _reduce_order(m: int, P, a, p) -> int:
    for q in _small_factors(m):
        while m % q == 0 and _ec_mul(m // q, P, a, p) is None:
            m //= q
    return m


def _unique_candidate(lo, hi, l_e, l_t, total):
    """The only n in [lo, hi] with l_e | n and l_t | total - n, if unique."""
    if l_e >= l_t:
        cands = (n for n in range(lo + (-lo) % l_e, hi + 1, l_e)
                 if (total - n) % l_t == 0)
    else:
        lo_t, hi_t = total - hi, total - lo
        cands = (total - m for m in range(lo_t + (-lo_t) % l_t, hi_t + 1, l_t)
                 if (total - m) % l_e == 0)
    found = None
    for n in cands:
        if found is not None:
            return None
        found = n
    return found


def _count_bsgs(c: Curve, p: int, max_points: int = 64):
    """#E(F_p) via point orders on E and its quadratic twist, or None."""
    c4, c6 = c.integral_c4, c.integral_c6
    A, B = (-27 * c4) % p, (-54 * c6) % p
    r = isqrt(4 * p)
    lo, hi = p + 1 - r, p + 1 + r
    l_e = l_t = 1
    tried = 0
    for x0 in range(p):
        d = (x0 * x0 * x0 + A * x0 + B) % p
        if d == 0:
            continue
        # (d*x0, d^2) lies on y^2 = x^3 + A d^2 x + B d^3, which is E when d is
        # a square and the quadratic twist otherwise.
        twist = legendre(d, p) == -1
        a_d = A * d * d % p
        P = (d * x0 % p, d * d % p)
        order = _point_order(P, a_d, p, lo, hi)
        if twist:
            l_t = l_t * order // gcd(l_t, order)
        else:
            l_e = l_e * order // gcd(l_e, order)
        n = _unique_candidate(lo, hi, l_e, l_t, 2 * p + 2)
        if n is not None:
            return n
        tried += 1
        if tried >= max_points:
            break
    return None


# -- public counting API --------------------------------------------------------

def count_points_mod_p(c: Curve, p: int) -> int:
    """#E(F_p) including the point at infinity, for a prime of good reduction."""
    if is_bad(c, p):
        raise BadReduction(f"{p} divides the discriminant of the integral model")
    if p == 2:
        return _count_by_enumeration(c, 2)
    if p >= BSGS_THRESHOLD:
        n = _count_bsgs(c, p)
        if n is not None:
            return n
    return _count_legendre(c, p)


def ap_bad(c: Curve, p: int):
    """``(a_p, reduction)`` at a bad prime.

    For p >= 5 the type is read off the tangent cone at the singular point:
    the reduced curve is isomorphic to y^2 = x^3 - 27 c4 x - 54 c6, whose node
    sits at x0 = -3 c6 / c4 with tangent cone y^2 = 3 x0 (x - x0)^2; a cusp
    (c4 = 0 mod p) is additive.  p = 2 and 3 are decided by counting smooth
    points of the reduction directly.
    """
    if not is_bad(c, p):
        raise GoodReduction(f"{p} is a prime of good reduction")
    if p < 5:
        ns = _count_by_enumeration(c, p, smooth_only=True)
        ap = p - ns
    else:
        c4 = c.integral_c4 % p
        c6 = c.integral_c6 % p
        if c4 == 0:
            ap = 0
        else:
            x0 = -3 * c6 * pow(c4, -1, p) % p
            ap = legendre(3 * x0, p)
    return ap, {0: "additive", 1: "split", -1: "nonsplit"}[ap]


def trace_ap(c: Curve, p: int) -> int:
    if is_bad(c, p):
        return ap_bad(c, p)[0]
    return p + 1 - count_points_mod_p(c, p)


def _entry(c: Curve, p: int):
    if is_bad(c, p):
        ap, red = ap_bad(c, p)
        return (p, ap, True, red)
    return (p, p + 1 - count_points_mod_p(c, p), False, "good")


def _entries_for(args):
    c, ps = args
    return [_entry(c, p) for p in ps]


# -- series -------------------------------------------------------------------------

@dataclass(frozen=True)
class ApEntry:
    p: int
    ap: int
    bad: bool
    reduction: str


@dataclass(frozen=True)
class ApSeries:
    """Prime-indexed a_p values; ``bound`` is the n the series was built for."""

    curve_id: str
    entries: tuple
    bound: int = 0

    def __post_init__(self):
        if self.bound < self.max_prime:
            object.__setattr__(self, "bound", self.max_prime)

    def __len__(self):
        return len(self.entries)

    @property
    def max_prime(self) -> int:
        return self.entries[-1].p if self.entries else 0

    @property
    def primes(self) -> List[int]:
        return [e.p for e in self.entries]

    @property
    def aps(self) -> List[int]:
        return [e.ap for e in self.entries]

    def as_dict(self) -> dict:
        return {e.p: e.ap for e in self.entries}

    def truncate(self, n: int) -> "ApSeries":
        return ApSeries(self.curve_id, tuple(e for e in self.entries if e.p <= n),
                        min(n, self.bound))

    def rows(self):
        return [(e.p, e.ap, "bad" if e.bad else "good", e.reduction)
                for e in self.entries]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "ap", "bad", "reduction"])
        for e in self.entries:
            w.writerow([e.p, e.ap, int(e.bad), e.reduction])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"curve_id": self.curve_id, "bound": self.bound,
               "entries": [{"p": e.p, "ap": e.ap, "bad": e.bad,
                            "reduction": e.reduction} for e in self.entries]}
        return json.dumps(doc, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ApSeries":
        doc = json.loads(text)
        return cls(doc["curve_id"], tuple(
            ApEntry(e["p"], e["ap"], e["bad"], e["reduction"]) for e in doc["entries"]),
            doc.get("bound", 0))

    @classmethod
    def from_csv(cls, text: str, curve_id: str) -> "ApSeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(curve_id, tuple(
            ApEntry(int(r["p"]), int(r["ap"]), r["bad"] in ("1", "True", "bad"),
                    r["reduction"]) for r in rows))


def _chunks(ps: Sequence[int], k: int):
    # interleave so that each chunk gets a similar mix of small and large p
    return [list(ps[i::k]) for i in range(k) if ps[i::k]]


def ap_series(c: Curve, n: int, workers: int = 1) -> ApSeries:
    """a_p for every prime p <= n; the result does not depend on ``workers``."""
    ps = primes_up_to(n)
    if workers <= 1 or len(ps) < 64:
        rows = [_entry(c, p) for p in ps]
    else:
        chunks = _chunks(ps, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_entries_for, [(c, ch) for ch in chunks]))
        rows = sorted((r for part in parts for r in part), key=lambda r: r[0])
    return ApSeries(c.curve_id, tuple(ApEntry(*r) for r in rows), max(n, 0))
