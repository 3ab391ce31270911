"""Period lattice, elliptic logarithm and the four-coordinate embedding.

Everything is computed on the short model y^2 = x^3 + A x + B = f(x) with
the differential dx/y.  Its period lattice is twice the lattice of the
invariant differential dx/(2y + a1 x + a3); in these units the real period
of y^2 = x^3 - x is 2 * int_1^oo dx / sqrt(x^3 - x) = 5.2441...  The
parametrisation is z -> (4 wp(z), 4 wp'(z)) with wp the Weierstrass function
of this lattice.

Periods and elliptic logarithms use the arithmetic-geometric mean.  For a
point on the identity component, with a0 = sqrt(e1 - e3), b0 = sqrt(e1 - e2),
c0 = sqrt(x - e3), the descending Landen iteration

    a' = (a + b) / 2,  b' = sqrt(a b),  c' = (c + sqrt(c^2 - a^2 + b^2)) / 2

converges to (M, M, c_oo) and int_x^oo dt / sqrt(f(t)) = 2 asin(M / c_oo) / M.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Sequence, Tuple

import mpmath
from sympy import Matrix
from sympy.polys.domains import ZZ
from sympy.polys.matrices import DomainMatrix

from .curve import Curve, Point, multiples, negate
from .errors import PrecisionTooLow

GUARD_BITS = 32
DISTINCT_TOL = 1e-12


@dataclass(frozen=True)
class PeriodLattice:
    omega1: mpmath.mpc
    omega2: mpmath.mpc
    tau: mpmath.mpc
    precision_bits: int
    roots: tuple            # (e1, e2, e3); e1 real and largest when all are real
    positive_disc: bool     # three real roots (two real components)


@dataclass(frozen=True)
class EmbeddedPoint:
    f1: mpmath.mpf
    f2: mpmath.mpf
    f3: mpmath.mpf
    f4: mpmath.mpf
    precision_bits: int

    def as_tuple(self):
        return (self.f1, self.f2, self.f3, self.f4)

    def in_bounds(self) -> bool:
        return (-1 <= self.f1 <= 1 and -1 <= self.f2 <= 1
                and 0 <= self.f3 < 1 and 0 <= self.f4 < 1)


@dataclass(frozen=True)
class LoopSample:
    n: int
    point: EmbeddedPoint
    base_point_id: str


def _mpf_of(q: Fraction) -> mpmath.mpf:
    return mpmath.mpf(q.numerator) / q.denominator


def _agm(a, b):
    eps = mpmath.eps * 4
    while abs(a - b) > eps * abs(a):
        a, b = (a + b) / 2, mpmath.sqrt(a * b)
    return (a + b) / 2


def _short_roots(c: Curve):
    A, B = _mpf_of(c.shortA), _mpf_of(c.shortB)
    roots = mpmath.polyroots([1, 0, A, B], maxsteps=200, extraprec=2 * mpmath.mp.prec)
    if c.disc > 0:
        e = sorted((mpmath.re(r) for r in roots), reverse=True)
        return tuple(e)
    roots = sorted(roots, key=lambda r: abs(mpmath.im(r)))
    e1 = mpmath.re(roots[0])
    e2, e3 = roots[1], roots[2]
    if mpmath.im(e2) < 0:
        e2, e3 = e3, e2
    return (e1, e2, e3)


@lru_cache(maxsize=64)
def periods(c: Curve, precision_bits: int = 128) -> PeriodLattice:
    """Basis (omega1, omega2) with omega1 the real period and Im(omega2/omega1) > 0."""
    if precision_bits < 64:
        raise ValueError("precision_bits must be at least 64")
    with mpmath.workprec(precision_bits + GUARD_BITS):
        e1, e2, e3 = _short_roots(c)
        two_pi = 2 * mpmath.pi
        if c.disc > 0:
            w1 = two_pi / _agm(mpmath.sqrt(e1 - e3), mpmath.sqrt(e1 - e2))
            w2 = mpmath.mpc(0, 1) * two_pi / _agm(mpmath.sqrt(e1 - e3), mpmath.sqrt(e2 - e3))
        else:
            beta = mpmath.sqrt(3 * e1 * e1 + _mpf_of(c.shortA))
            alpha = 3 * e1
            m_plus = _agm(2 * mpmath.sqrt(beta), mpmath.sqrt(2 * beta + alpha))
            m_minus = _agm(2 * mpmath.sqrt(beta), mpmath.sqrt(2 * beta - alpha))
            w1 = 2 * two_pi / m_plus
            w2 = -w1 / 2 + mpmath.mpc(0, 1) * 2 * mpmath.pi / m_minus
        w1 = mpmath.mpc(w1)
        w2 = mpmath.mpc(w2)
        tau = w2 / w1
        assert mpmath.im(tau) > 0
        return PeriodLattice(w1, w2, tau, precision_bits, (e1, e2, e3), c.disc > 0)


def _landen_tail(x, L: PeriodLattice):
    """int_x^oo dt / sqrt(f(t)) for x >= e1 (identity component)."""
    e1, e2, e3 = L.roots
    if L.positive_disc:
        a, b = mpmath.sqrt(e1 - e3), mpmath.sqrt(e1 - e2)
        c = mpmath.sqrt(x - e3)
    else:
        # one complex AGM step lands on real numbers
        w = mpmath.sqrt(e1 - e3)
        a, b = mpmath.re(w), abs(w)
        c = mpmath.re(mpmath.sqrt(x - e3))
    eps = mpmath.eps * 4
    while abs(a - b) > eps * a:
        c = (c + mpmath.sqrt(c * c - a * a + b * b)) / 2
        a, b = (a + b) / 2, mpmath.sqrt(a * b)
    r = a / c
    if r > 1:
        r = mpmath.mpf(1)
    return 2 * mpmath.asin(r) / a


def cell_coords(L: PeriodLattice, z) -> Tuple[mpmath.mpf, mpmath.mpf]:
    """(a, b) in [0, 1)^2 with z = (a + b tau) omega1 mod the lattice."""
    w = z / L.omega1
    b = mpmath.im(w) / mpmath.im(L.tau)
    a = mpmath.re(w) - b * mpmath.re(L.tau)
    return _frac(a), _frac(b)


def _frac(v):
    v = v - mpmath.floor(v)
    if v >= 1:
        v = mpmath.mpf(0)
    return v


def _log_short(L: PeriodLattice, X, Y, y_is_zero: bool):
    e1, e2, e3 = L.roots
    w1, w2 = L.omega1, L.omega2
    if y_is_zero:
        # 2-torsion: match the root
        ds = [abs(X - e) for e in (e1, e2, e3)]
        i = ds.index(min(ds))
        if i == 0 or not L.positive_disc:
            return w1 / 2
        return w2 / 2 if i == 2 else (w1 + w2) / 2
    if L.positive_disc and X < e1:
        # egg component: translate by T3 = (e3, 0) onto the identity component
        lam = Y / (X - e3)
        X2 = lam * lam - X - e3
        Y2 = lam * (X - X2) - Y
        return _log_short(L, X2, Y2, False) + w2 / 2
    t = _landen_tail(X, L)
    return t if Y < 0 else w1 - t


def elliptic_log(c: Curve, L: PeriodLattice, p: Point):
    """z in C with psi(z) = p, reduced into the fundamental cell of the lattice."""
    if p.is_infinity:
        return mpmath.mpc(0)
    with mpmath.workprec(L.precision_bits + GUARD_BITS):
        s = c.to_short(p)
        z = _log_short(L, _mpf_of(s.x), _mpf_of(s.y), s.y == 0)
        a, b = cell_coords(L, z)
        return (a + b * L.tau) * L.omega1


def psi(L: PeriodLattice, z) -> Tuple[mpmath.mpc, mpmath.mpc]:
    """(x, y) on the short model for z not in the lattice, via q-expansions of wp."""
    with mpmath.workprec(L.precision_bits + GUARD_BITS):
        a, b = cell_coords(L, z)
        if b > 0.5:
            b -= 1
        w = a + b * L.tau
        u = mpmath.expjpi(2 * w)
        q = mpmath.expjpi(2 * L.tau)
        k = 2j * mpmath.pi / L.omega1
        wp = mpmath.mpf(1) / 12 + u / (1 - u) ** 2
        dwp = u * (1 + u) / (1 - u) ** 3
        qn = q
        eps = mpmath.eps
        while True:
            v, r = qn * u, qn / u
            tv = v / (1 - v) ** 2 + r / (1 - r) ** 2 - 2 * qn / (1 - qn) ** 2
            td = v * (1 + v) / (1 - v) ** 3 - r * (1 + r) / (1 - r) ** 3
            wp += tv
            dwp += td
            if abs(tv) + abs(td) < eps * (abs(wp) + abs(dwp)) and abs(qn) < eps:
                break
            qn *= q
        return 4 * k * k * wp, 4 * k ** 3 * dwp


def embed(c: Curve, L: PeriodLattice, p: Point) -> EmbeddedPoint:
    """Phi(P) = (x/(1+|x|), y/(1+|y|), cell coordinates of the elliptic log).

    The point at infinity maps to (1, 1, 0, 0).
    """
    bits = L.precision_bits
    if p.is_infinity:
        return EmbeddedPoint(mpmath.mpf(1), mpmath.mpf(1), mpmath.mpf(0),
                             mpmath.mpf(0), bits)
    with mpmath.workprec(bits + GUARD_BITS):
        z = elliptic_log(c, L, p)
        f3, f4 = cell_coords(L, z)
    with mpmath.workprec(bits):
        f1 = _mpf_of(p.x / (1 + abs(p.x)))
        f2 = _mpf_of(p.y / (1 + abs(p.y)))
        f3, f4 = _frac(+f3), _frac(+f4)
    e = EmbeddedPoint(f1, f2, f3, f4, bits)
    assert e.in_bounds(), e
    return e


def _point_id(c: Curve, p: Point) -> str:
    return f"{c.curve_id}:{'O' if p.is_infinity else f'{p.x},{p.y}'}"


def sample_loop(c: Curve, p: Point, n_max: int, c_factor: float = 4.0,
                floor_bits: int = 128) -> List[LoopSample]:
    """Phi(nP) for n = -n_max..n_max, each at the precision its height needs."""
    from .heights import canonical_height, precision_for
    hhat = canonical_height(c, p)
    pos = multiples(c, p, n_max)
    out = []
    pid = _point_id(c, p)
    for n in range(-n_max, n_max + 1):
        pt = pos[n] if n >= 0 else negate(c, pos[-n])
        bits = max(floor_bits, precision_for(hhat * n * n, c_factor))
        out.append(LoopSample(n, embed(c, periods(c, bits), pt), pid))
    return out


def _circ(a, b):
    d = abs(a - b) % 1
    return min(d, 1 - d)


def same_point(u: EmbeddedPoint, v: EmbeddedPoint, tol: float = DISTINCT_TOL) -> bool:
    return (abs(u.f1 - v.f1) < tol and abs(u.f2 - v.f2) < tol
            and _circ(u.f3, v.f3) < tol and _circ(u.f4, v.f4) < tol)


def distinct_points(pts: Sequence[EmbeddedPoint], tol: float = DISTINCT_TOL) -> List[EmbeddedPoint]:
    reps: List[EmbeddedPoint] = []
    for e in pts:
        if not any(same_point(e, r, tol) for r in reps):
            reps.append(e)
    return reps


def loops_csv(samples: Sequence[LoopSample], digits: int = 30) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "f1", "f2", "f3", "f4"])
    for s in samples:
        w.writerow([s.n] + [mpmath.nstr(v, digits, strip_zeros=False)
                            for v in s.point.as_tuple()])
    return buf.getvalue()


def loops_json(samples: Sequence[LoopSample], digits: int = 30) -> str:
    doc = {"schema_version": 1, "kind": "loop_samples", "digits": digits,
           "samples": [{"n": s.n, "precision_bits": s.point.precision_bits,
                        "base_point_id": s.base_point_id,
                        "phi": [mpmath.nstr(v, digits, strip_zeros=False)
                                for v in s.point.as_tuple()]} for s in samples]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- independence of elliptic logarithms ----------------------------------------

def _relations(coords, bits: int) -> List[List[int]]:
    """Small integer relations sum n_i (a_i, b_i) in Z^2 found by LLL."""
    k = len(coords)
    C = mpmath.mpf(2) ** bits
    dim = k + 2
    rows = []
    for i, (a, b) in enumerate(coords):
        row = [0] * dim + [int(mpmath.nint(a * C)), int(mpmath.nint(b * C))]
        row[i] = 1
        rows.append(row)
    unit = int(C)
    rows.append([0] * k + [1, 0] + [unit, 0])
    rows.append([0] * k + [0, 1] + [0, unit])
    red = DomainMatrix([[ZZ(v) for v in r] for r in rows], (dim, dim + 2), ZZ).lll()
    bound = 2 ** (bits // dim)
    found = []
    for r in red.to_Matrix().tolist():
        r = [int(v) for v in r]
        coeffs = r[:k]
        if not any(coeffs):
            continue
        if max(abs(v) for v in coeffs) <= bound and max(abs(r[-1]), abs(r[-2])) <= bound:
            sign = 1 if next(v for v in coeffs if v) > 0 else -1
            found.append([sign * v for v in coeffs])
    return found


def _span_rank(vecs) -> int:
    return Matrix(vecs).rank() if vecs else 0


def loop_rank(c: Curve, points: Sequence[Point], precision_bits: int = 128):
    """Number of independent elliptic logarithms modulo the lattice and torsion.

    Returns ``(k - rank of relation module, relations)``; relations are
    integer vectors n with sum n_i P_i torsion.  Raises PrecisionTooLow when
    the relations found at ``precision_bits`` and at twice that disagree.
    """
    points = list(points)
    if not points:
        return 0, []
    found = {}
    for bits in (precision_bits, 2 * precision_bits):
        L = periods(c, bits)
        with mpmath.workprec(bits + GUARD_BITS):
            coords = [cell_coords(L, elliptic_log(c, L, p)) for p in points]
            found[bits] = _relations(coords, bits)
    lo, hi = found[precision_bits], found[2 * precision_bits]
    r_lo, r_hi = _span_rank(lo), _span_rank(hi)
    if r_lo != r_hi or _span_rank(lo + hi) != r_lo:
        raise PrecisionTooLow(
            f"relations at {precision_bits} bits ({r_lo}) and {2 * precision_bits} "
            f"bits ({r_hi}) disagree")
    basis = _independent_rows(lo)
    return len(points) - r_lo, basis


def _independent_rows(vecs):
    out = []
    for v in sorted(vecs, key=lambda v: (sum(abs(x) for x in v), v)):
        if _span_rank(out + [v]) > len(out):
            out.append(v)
    return out
