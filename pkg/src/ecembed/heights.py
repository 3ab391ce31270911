"""Naive and canonical heights, the height pairing and regulators.

The canonical height is the doubling limit

    hhat(P) = lim_{n -> oo} h(x(2^n P)) / 4^n,    h(a/b) = log max(|a|, |b|).

Writing x(2^n P) = A_n / B_n in lowest terms, one doubling sends (A, B) to
(phi(A, B), psi(A, B)) / g with phi, psi the binary quartic duplication forms
and g = gcd(phi, psi), which is supported on primes dividing the
discriminant.  So

    H_{n+1} = 4 H_n + log max(|phi(s, t)|, |psi(s, t)|) - log g_n

where (s, t) is (A_n, B_n) scaled to sup-norm 1.  The archimedean term is
evaluated in floating point and g_n exactly from residues of (A_n, B_n)
modulo a high power of each candidate prime; the coordinates themselves are
never formed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import mpmath
import numpy as np
import sympy

from .curve import Curve, Point, add_points, torsion_order
from .errors import NonConvergence

DEFAULT_TOL = 1e-20
RANK_TOL = 1e-3
MAX_DOUBLINGS = 40


def naive_height(p: Point, prec: int = 128) -> mpmath.mpf:
    if p.is_infinity:
        return mpmath.mpf(0)
    x = p.x
    with mpmath.workprec(prec):
        return +mpmath.log(max(abs(x.numerator), x.denominator))


def _valuation(n: int, p: int, cap: int) -> int:
    if n == 0:
        return cap
    v = 0
    while n % p == 0 and v < cap:
        n //= p
        v += 1
    return v


class _ResiduesExhausted(Exception):
    pass


def _doubling_sequence(c: Curve, p: Point, steps: int, tol: Optional[float],
                       prec: int, k_scale: int):
    """Yield H_n / 4^n for n = 0, 1, ... (see module docstring)."""
    u = c.integral_scale
    a1, a2, a3, a4, a6 = c.integral_ainvs
    b2 = a1 * a1 + 4 * a2
    b4 = a1 * a3 + 2 * a4
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    disc = c.integral_disc
    x = p.x * u * u
    A, B = x.numerator, x.denominator

    primes = sorted(set(sympy.factorint(abs(disc))) | {2, 3})
    depth = {q: k_scale * (2 * _valuation(disc, q, 10 ** 6) + 4) for q in primes}
    mods = {q: q ** depth[q] for q in primes}
    res = {q: (A % mods[q], B % mods[q]) for q in primes}

    with mpmath.workprec(prec):
        H = mpmath.log(max(abs(A), abs(B)))
        m = max(abs(A), abs(B))
        s = mpmath.mpf(A) / m
        t = mpmath.mpf(B) / m
        scale = mpmath.mpf(1)
        yield H
        for n in range(1, steps + 1):
            s2, t2 = s * s, t * t
            phi = s2 * s2 - b4 * s2 * t2 - 2 * b6 * s * t2 * t - b8 * t2 * t2
            psi = 4 * s2 * s * t + b2 * s2 * t2 + 2 * b4 * s * t2 * t + b6 * t2 * t2
            big = max(abs(phi), abs(psi))
            log_g = mpmath.mpf(0)
            new_res = {}
            vals = {}
            for q in primes:
                mq = mods[q]
                ra, rb = res[q]
                ra2, rb2 = ra * ra % mq, rb * rb % mq
                Ph = (ra2 * ra2 - b4 * ra2 * rb2 - 2 * b6 * ra * rb2 * rb
                      - b8 * rb2 * rb2) % mq
                Ps = (4 * ra2 * ra * rb + b2 * ra2 * rb2 + 2 * b4 * ra * rb2 * rb
                      + b6 * rb2 * rb2) % mq
                v = min(_valuation(Ph, q, depth[q]), _valuation(Ps, q, depth[q]))
                if v >= depth[q] - 1:
                    raise _ResiduesExhausted(q)
                vals[q] = v
                new_res[q] = (Ph, Ps)
            for q in primes:
                v = vals[q]
                if v:
                    log_g += v * mpmath.log(q)
            for q in primes:
                Ph, Ps = new_res[q]
                v = vals[q]
                d = depth[q] - v
                mq = q ** d
                unit = 1
                for r in primes:
                    if r != q and vals[r]:
                        unit = unit * pow(r, vals[r], mq) % mq
                inv = pow(unit, -1, mq)
                res[q] = ((Ph // q ** v) * inv % mq, (Ps // q ** v) * inv % mq)
                depth[q] = d
                mods[q] = mq
            H = 4 * H + mpmath.log(big) - log_g
            s, t = phi / big, psi / big
            scale *= 4
            yield H / scale


def canonical_height(c: Curve, p: Point, tol: float = DEFAULT_TOL,
                     prec: int = 160, max_doublings: int = MAX_DOUBLINGS) -> mpmath.mpf:
    """Canonical height by the doubling limit; torsion points give exactly 0.

    Iterates until two successive estimates differ by at most ``tol``.
    """
    if p.is_infinity or torsion_order(c, p) is not None:
        return mpmath.mpf(0)
    k_scale = 1
    for _attempt in range(6):
        try:
            prev = None
            for n, est in enumerate(_doubling_sequence(c, p, max_doublings, tol,
                                                       prec, k_scale)):
                if prev is not None and n >= 2 and abs(est - prev) <= tol:
                    return est
                prev = est
            raise NonConvergence(
                f"no convergence to {tol} within {max_doublings} doublings")
        except _ResiduesExhausted:
            k_scale *= 4
    raise NonConvergence("p-adic residue precision exhausted")


def height_sequence(c: Curve, p: Point, steps: int, prec: int = 160) -> List[mpmath.mpf]:
    """``[h(x(2^n P)) / 4^n for n in 0..steps]`` from the fast recursion."""
    return list(_doubling_sequence(c, p, steps, None, prec, 4))


def height_pairing(c: Curve, p: Point, q: Point, tol: float = DEFAULT_TOL,
                   prec: int = 160) -> mpmath.mpf:
    """<P, Q> = (hhat(P+Q) - hhat(P) - hhat(Q)) / 2."""
    s = add_points(c, p, q)
    with mpmath.workprec(prec):
        return (canonical_height(c, s, tol, prec) - canonical_height(c, p, tol, prec)
                - canonical_height(c, q, tol, prec)) / 2


@dataclass
class HeightData:
    points: List[Point]
    gram: List[List[mpmath.mpf]]
    regulator: mpmath.mpf
    rank: int
    independent: List[int] = field(default_factory=list)
    full_det: mpmath.mpf = mpmath.mpf(1)
    tol: float = DEFAULT_TOL
    rank_tol: float = RANK_TOL

    def to_json(self) -> dict:
        from .tables import fmt_real
        return {
            "points": [pt.to_json() for pt in self.points],
            "gram": [[fmt_real(v) for v in row] for row in self.gram],
            "regulator": fmt_real(self.regulator),
            "full_det": fmt_real(self.full_det),
            "rank": self.rank,
            "independent": list(self.independent),
            "tolerances": {"height_tol": self.tol, "rank_tol": self.rank_tol},
        }


def _numerical_rank(mat: Sequence[Sequence], rank_tol: float) -> int:
    if not len(mat):
        return 0
    sv = np.linalg.svd(np.array([[float(v) for v in row] for row in mat]),
                       compute_uv=False)
    return int((sv > rank_tol).sum())


def gram_and_regulator(c: Curve, points: Sequence[Point], tol: float = DEFAULT_TOL,
                       rank_tol: float = RANK_TOL, prec: int = 160) -> HeightData:
    points = list(points)
    k = len(points)
    heights: Dict[int, mpmath.mpf] = {i: canonical_height(c, pt, tol, prec)
                                      for i, pt in enumerate(points)}
    gram = [[mpmath.mpf(0)] * k for _ in range(k)]
    with mpmath.workprec(prec):
        for i in range(k):
            gram[i][i] = heights[i]
            for j in range(i + 1, k):
                hs = canonical_height(c, add_points(c, points[i], points[j]), tol, prec)
                v = (hs - heights[i] - heights[j]) / 2
                gram[i][j] = gram[j][i] = v
        rank = _numerical_rank(gram, rank_tol)
        chosen: List[int] = []
        for i in range(k):
            trial = chosen + [i]
            sub = [[gram[a][b] for b in trial] for a in trial]
            if _numerical_rank(sub, rank_tol) == len(trial):
                chosen = trial
        if chosen:
            reg = mpmath.det(mpmath.matrix([[gram[a][b] for b in chosen] for a in chosen]))
        else:
            reg = mpmath.mpf(1)
        full = mpmath.det(mpmath.matrix(gram)) if k else mpmath.mpf(1)
    return HeightData(points, gram, reg, rank, chosen, full, tol, rank_tol)


def precision_for(hhat, c_factor: float = 4.0) -> int:
    """Working precision (bits) for a point of canonical height ``hhat``."""
    if hhat < 0:
        raise ValueError("hhat must be nonnegative")
    if not 1 <= c_factor <= 16:
        raise ValueError("c_factor must lie in [1, 16]")
    return max(64, math.ceil(c_factor * float(hhat) / math.log(2)) + 32)


def predicted_height(gram: Sequence[Sequence], coeffs: Sequence[int]) -> mpmath.mpf:
    """sum_{i,j} n_i n_j <P_i, P_j> for a combination of the Gram basis."""
    total = mpmath.mpf(0)
    for i, ni in enumerate(coeffs):
        for j, nj in enumerate(coeffs):
            total += ni * nj * gram[i][j]
    return total


def sparse_combinations(r: int, n_max: int, budget: int, seed: int = 0) -> List[tuple]:
    """Coefficient vectors in [-n_max, n_max]^r, at most ``budget`` of them.

    Exhaustive when the full box fits in the budget.  Otherwise: the zero
    vector and every single-generator line, then all pairs (i, j) on a grid
    whose step is the smallest that keeps the pair part within half the
    budget, then seeded Latin-hypercube draws until the budget is met.
    """
    if r < 1 or budget < 1 or n_max < 0:
        raise ValueError("need r >= 1, budget >= 1, n_max >= 0")
    width = 2 * n_max + 1
    if width ** r <= budget:
        import itertools
        return [tuple(v) for v in itertools.product(range(-n_max, n_max + 1), repeat=r)]

    seen = set()
    out: List[tuple] = []

    def push(v):
        if v not in seen and len(out) < budget:
            seen.add(v)
            out.append(v)

    push((0,) * r)
    for i in range(r):
        for n in range(-n_max, n_max + 1):
            if n:
                v = [0] * r
                v[i] = n
                push(tuple(v))
    n_pairs = r * (r - 1) // 2
    step = 1
    while n_pairs * len(range(-n_max, n_max + 1, step)) ** 2 > budget // 2 and step < width:
        step += 1
    grid = [g for g in range(-n_max, n_max + 1, step) if g]
    for i in range(r):
        for j in range(i + 1, r):
            for a in grid:
                for b in grid:
                    v = [0] * r
                    v[i], v[j] = a, b
                    push(tuple(v))
    rng = np.random.default_rng(seed)
    total_space = width ** r
    while len(out) < min(budget, total_space):
        k = budget - len(out)
        cols = []
        for _ in range(r):
            strata = (rng.permutation(k) + rng.random(k)) / k
            cols.append(np.minimum(np.floor(strata * width), width - 1).astype(int) - n_max)
        for row in zip(*cols):
            push(tuple(int(v) for v in row))
    return out
