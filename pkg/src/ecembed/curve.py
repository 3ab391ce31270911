"""Exact arithmetic on elliptic curves over Q.

Curves are stored in long Weierstrass form

    y^2 + a1*x*y + a3*y = x^3 + a2*x^2 + a4*x + a6

with coefficients held as :class:`fractions.Fraction` (always in lowest terms,
positive denominator).  The group law works on the long model directly, so
nothing here needs 2 or 3 to be invertible.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Iterable, Optional, Union

from .errors import SingularCurve

RationalLike = Union[int, str, Fraction]

#: Rational torsion orders allowed by Mazur's theorem are 1..10 and 12.
MAZUR_BOUND = 12


def to_rational(v: RationalLike) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise TypeError("bool is not a rational coefficient")
    if isinstance(v, (int, str)):
        return Fraction(v)
    raise TypeError(f"cannot interpret {v!r} as an exact rational")


def rational_str(q: Fraction) -> str:
    """Render ``q`` as ``"num/den"`` (denominator always present)."""
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Point:
    """A point on a curve: affine ``(x, y)`` or the point at infinity.

    The point at infinity is the instance with ``x is None``; use
    :data:`INFINITY` rather than constructing it by hand.
    """

    x: Optional[Fraction] = None
    y: Optional[Fraction] = None

    def __post_init__(self):
        if (self.x is None) != (self.y is None):
            raise ValueError("affine points need both coordinates")
        if self.x is not None:
            object.__setattr__(self, "x", to_rational(self.x))
            object.__setattr__(self, "y", to_rational(self.y))

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __repr__(self) -> str:
        if self.is_infinity:
            return "Point(O)"
        return f"Point({self.x}, {self.y})"

    def to_json(self):
        if self.is_infinity:
            return None
        return [rational_str(self.x), rational_str(self.y)]

    @classmethod
    def from_json(cls, obj) -> "Point":
        if obj is None:
            return INFINITY
        x, y = obj
        return cls(Fraction(x), Fraction(y))


INFINITY = Point()


def affine(x: RationalLike, y: RationalLike) -> Point:
    return Point(to_rational(x), to_rational(y))


@dataclass(frozen=True)
class Curve:
    a1: Fraction
    a2: Fraction
    a3: Fraction
    a4: Fraction
    a6: Fraction

    # b- and c-invariants (Tate's notation)
    @cached_property
    def b2(self) -> Fraction:
        return self.a1 * self.a1 + 4 * self.a2

    @cached_property
    def b4(self) -> Fraction:
        return self.a1 * self.a3 + 2 * self.a4

    @cached_property
    def b6(self) -> Fraction:
        return self.a3 * self.a3 + 4 * self.a6

    @cached_property
    def b8(self) -> Fraction:
        a1, a2, a3, a4, a6 = self.ainvs
        return (a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4
                + a2 * a3 * a3 - a4 * a4)

    @cached_property
    def c4(self) -> Fraction:
        return self.b2 ** 2 - 24 * self.b4

    @cached_property
    def c6(self) -> Fraction:
        return -self.b2 ** 3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @cached_property
    def disc(self) -> Fraction:
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @cached_property
    def shortA(self) -> Fraction:
        return -self.c4 / 48

    @cached_property
    def shortB(self) -> Fraction:
        return -self.c6 / 864

    @property
    def ainvs(self) -> tuple:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def is_short(self) -> bool:
        return self.a1 == 0 and self.a2 == 0 and self.a3 == 0

    @cached_property
    def curve_id(self) -> str:
        """Stable content hash of the a-invariants (16 hex digits)."""
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @cached_property
    def integral_scale(self) -> int:
        """Smallest u > 0 such that the model scaled by u has integral a_i."""
        return lcm(*(a.denominator for a in self.ainvs))

    @cached_property
    def integral_ainvs(self) -> tuple:
        """a-invariants of the model ``a_i -> u^i a_i`` (integers)."""
        u = self.integral_scale
        out = tuple(a * u ** k for a, k in zip(self.ainvs, (1, 2, 3, 4, 6)))
        assert all(a.denominator == 1 for a in out)
        return tuple(int(a) for a in out)

    @cached_property
    def integral_disc(self) -> int:
        d = self.disc * self.integral_scale ** 12
        assert d.denominator == 1
        return int(d)

    @cached_property
    def integral_c4(self) -> int:
        return int(self.c4 * self.integral_scale ** 4)

    @cached_property
    def integral_c6(self) -> int:
        return int(self.c6 * self.integral_scale ** 6)

    def to_short(self, p: Point) -> Point:
        """Map a point of this model to ``y^2 = x^3 + shortA*x + shortB``."""
        if p.is_infinity:
            return p
        return Point(p.x + self.b2 / 12, p.y + (self.a1 * p.x + self.a3) / 2)

    def from_short(self, p: Point) -> Point:
        if p.is_infinity:
            return p
        x = p.x - self.b2 / 12
        return Point(x, p.y - (self.a1 * x + self.a3) / 2)

    def to_json(self) -> dict:
        return {"ainvs": [rational_str(a) for a in self.ainvs]}

    @classmethod
    def from_json(cls, obj: dict) -> "Curve":
        return make_curve(*obj["ainvs"])

    def __repr__(self) -> str:
        return "Curve([{}])".format(", ".join(str(a) for a in self.ainvs))


def make_curve(a1: RationalLike, a2: RationalLike, a3: RationalLike,
               a4: RationalLike, a6: RationalLike) -> Curve:
    """Build a curve from long-Weierstrass coefficients.

    Raises SingularCurve if the discriminant vanishes.
    """
    c = Curve(*(to_rational(a) for a in (a1, a2, a3, a4, a6)))
    if c.disc == 0:
        raise SingularCurve(f"discriminant of {c!r} is zero")
    return c


def short_curve(A: RationalLike, B: RationalLike) -> Curve:
    return make_curve(0, 0, 0, A, B)


def is_on_curve(c: Curve, p: Point) -> bool:
    if p.is_infinity:
        return True
    x, y = p.x, p.y
    lhs = y * y + c.a1 * x * y + c.a3 * y
    rhs = ((x + c.a2) * x + c.a4) * x + c.a6
    return lhs == rhs


def negate(c: Curve, p: Point) -> Point:
    if p.is_infinity:
        return p
    return Point(p.x, -p.y - c.a1 * p.x - c.a3)


def add_points(c: Curve, p: Point, q: Point) -> Point:
    """Chord-tangent addition on the long Weierstrass model."""
    if p.is_infinity:
        return q
    if q.is_infinity:
        return p
    a1, a2, a3, a4, a6 = c.ainvs
    x1, y1, x2, y2 = p.x, p.y, q.x, q.y
    if x1 == x2:
        if y1 + y2 + a1 * x2 + a3 == 0:
            return INFINITY
        den = 2 * y1 + a1 * x1 + a3
        lam = (3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1) / den
        nu = (-x1 ** 3 + a4 * x1 + 2 * a6 - a3 * y1) / den
    else:
        dx = x2 - x1
        lam = (y2 - y1) / dx
        nu = (y1 * x2 - y2 * x1) / dx
    x3 = lam * lam + a1 * lam - a2 - x1 - x2
    y3 = -(lam + a1) * x3 - nu - a3
    return Point(x3, y3)


def scalar_mul(c: Curve, n: int, p: Point) -> Point:
    """Return ``n*p`` by double-and-add; negative ``n`` negates first."""
    if n < 0:
        return scalar_mul(c, -n, negate(c, p))
    result = INFINITY
    addend = p
    while n:
        if n & 1:
            result = add_points(c, result, addend)
        n >>= 1
        if n:
            addend = add_points(c, addend, addend)
    return result


def multiples(c: Curve, p: Point, n_max: int) -> list:
    """``[0*p, 1*p, ..., n_max*p]`` by repeated addition."""
    out = [INFINITY]
    cur = INFINITY
    for _ in range(n_max):
        cur = add_points(c, cur, p)
        out.append(cur)
    return out


def torsion_order(c: Curve, p: Point) -> Optional[int]:
    """Order of ``p`` if it is at most 12, otherwise ``None`` (infinite order).

    Over Q no rational point has finite order above 12, so exhausting the
    multiples up to that bound decides the question.
    """
    cur = p
    for n in range(1, MAZUR_BOUND + 1):
        if cur.is_infinity:
            return n
        cur = add_points(c, cur, p)
    return None


def combination(c: Curve, coeffs: Iterable[int], points: Iterable[Point]) -> Point:
    """``sum(n_i * P_i)``."""
    acc = INFINITY
    for n, pt in zip(coeffs, points):
        if n:
            acc = add_points(c, acc, scalar_mul(c, n, pt))
    return acc
