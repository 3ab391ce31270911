import itertools

import mpmath
import pytest

from ecembed.catalog import builtin_catalog, lookup
from ecembed.curve import INFINITY, add_points, affine, combination, negate, scalar_mul
from ecembed.errors import NonConvergence
from ecembed.heights import (canonical_height, gram_and_regulator, height_pairing,
                             height_sequence, naive_height, precision_for,
                             predicted_height, sparse_combinations)
from oracles import exact_height_sequence

GEN_RECORDS = [r for r in builtin_catalog() if r.generators]


@pytest.mark.parametrize("cid,pt", [("E2", (2, 2)), ("E1", (6, 10)), ("E3", (3, 12)),
                                    ("E3", (8, 2))])
def test_fast_recursion_matches_exact_doubling(cid, pt):
    c = lookup(cid).curve
    fast = height_sequence(c, affine(*pt), 9)
    exact = exact_height_sequence(c.ainvs, pt[0], pt[1], 9)
    for a, b in zip(fast, exact):
        assert abs(a - b) < 1e-15


def test_known_heights():
    cases = {("E2", (2, 2)): "0.450320685639874", ("E1", (6, 10)): "1.70847073495508",
             ("E3", (3, 12)): "1.34928354736571", ("E3", (8, 2)): "1.78381305093132"}
    for (cid, pt), want in cases.items():
        h = canonical_height(lookup(cid).curve, affine(*pt))
        assert abs(h - mpmath.mpf(want)) < 1e-13


def test_torsion_heights_vanish():
    for rec in builtin_catalog():
        for t in rec.torsion_points:
            assert canonical_height(rec.curve, t) == 0
    assert canonical_height(lookup("E0").curve, INFINITY) == 0


@pytest.mark.parametrize("rec", GEN_RECORDS, ids=lambda r: r.id)
def test_quadratic_and_even(rec):
    c = rec.curve
    for g in rec.generators:
        h = canonical_height(c, g)
        assert abs(canonical_height(c, negate(c, g)) - h) < 1e-15
        for n in (2, 3):
            hn = canonical_height(c, scalar_mul(c, n, g))
            assert abs(hn - n * n * h) < 1e-12 * n * n * h


def test_parallelogram_law():
    rec = lookup("E3")
    c = rec.curve
    P, Q = rec.generators[0], rec.generators[1]
    lhs = (canonical_height(c, add_points(c, P, Q))
           + canonical_height(c, add_points(c, P, negate(c, Q))))
    rhs = 2 * canonical_height(c, P) + 2 * canonical_height(c, Q)
    assert abs(lhs - rhs) < 1e-14


def test_torsion_translation_invariance():
    rec = lookup("E3")
    c = rec.curve
    g, t = rec.generators[0], rec.torsion_points[0]
    assert abs(canonical_height(c, add_points(c, g, t)) - canonical_height(c, g)) < 1e-15


def test_naive_height():
    from fractions import Fraction
    from ecembed.curve import Point
    assert abs(naive_height(Point(Fraction(-7, 3), Fraction(1))) - mpmath.log(7)) < 1e-15
    assert naive_height(INFINITY) == 0


def test_nonconvergence():
    c = lookup("E1").curve
    with pytest.raises(NonConvergence):
        canonical_height(c, affine(6, 10), tol=1e-40, max_doublings=5)


def test_gram_ranks():
    e2 = gram_and_regulator(lookup("E2").curve, lookup("E2").generators)
    assert e2.rank == 1
    e1 = gram_and_regulator(lookup("E1").curve, lookup("E1").generators)
    assert e1.rank == 2 and e1.regulator > 1e-3
    e3 = gram_and_regulator(lookup("E3").curve, lookup("E3").generators)
    assert e3.rank == 3 and e3.independent == [0, 1, 2]


def test_gram_detects_dependence():
    rec = lookup("E1")
    c = rec.curve
    pts = list(rec.generators) + [combination(c, (1, 2), rec.generators)]
    hd = gram_and_regulator(c, pts)
    assert hd.rank == 2 and hd.independent == [0, 1]
    assert abs(hd.full_det) < 1e-10
    empty = gram_and_regulator(c, [])
    assert empty.rank == 0 and empty.regulator == 1


def test_height_pairing_symmetric_bilinear():
    rec = lookup("E3")
    c = rec.curve
    P, Q, R = rec.generators
    pq = height_pairing(c, P, Q)
    assert abs(pq - height_pairing(c, Q, P)) < 1e-15
    lhs = height_pairing(c, add_points(c, P, R), Q)
    assert abs(lhs - (pq + height_pairing(c, R, Q))) < 1e-13


def test_combination_heights_from_gram_e1():
    rec = lookup("E1")
    c = rec.curve
    hd = gram_and_regulator(c, rec.generators)
    for n in itertools.product(range(-3, 4), repeat=2):
        if not any(n):
            continue
        actual = canonical_height(c, combination(c, n, rec.generators))
        pred = predicted_height(hd.gram, n)
        assert abs(pred - actual) < 1e-4 * actual


def test_precision_policy():
    assert precision_for(0) == 64
    assert precision_for(100, 4) == int(mpmath.ceil(400 / mpmath.log(2))) + 32
    with pytest.raises(ValueError):
        precision_for(1, 0.5)
    with pytest.raises(ValueError):
        precision_for(-1)


def test_sparse_combinations():
    full = sparse_combinations(2, 2, 1000)
    assert len(full) == 25
    s = sparse_combinations(8, 3, 500, seed=1)
    assert len(s) == 500 and len(set(s)) == 500
    assert s[0] == (0,) * 8
    assert all(max(abs(v) for v in row) <= 3 for row in s)
    assert s == sparse_combinations(8, 3, 500, seed=1)
    assert s != sparse_combinations(8, 3, 500, seed=2)
