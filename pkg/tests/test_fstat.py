import math
import random

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from ecembed.catalog import lookup
from ecembed.errors import AllSamplesDegenerate, DegenerateSchedule, InsufficientSeries
from ecembed.fstat import (FSample, estimate_rank, f_ms, f_ms_many, f_new, fit_growth,
                           rank_from_fit, schedule)
from ecembed.modp import ap_series
from oracles import f_oracle

E0 = lookup("E0").curve


@pytest.fixture(scope="module")
def series():
    return {cid: ap_series(lookup(cid).curve, 20000) for cid in ("E0", "E2", "E1", "E3")}


def test_f_new_e0_at_5():
    s = ap_series(E0, 5)
    v = f_new(s, 5).value
    assert abs(v - mpmath.mpf("-0.28790500622144")) < 1e-13
    oracle = f_oracle([(e.p, e.ap) for e in s.entries], 5)
    assert abs(v - oracle) <= 1e-12 * abs(oracle)
    # only p = 5 contributes: a_5 = -2
    with mpmath.workdps(60):
        assert abs(v - (-2 * mpmath.log(5) / mpmath.sqrt(5) / 5)) < 1e-30


def test_second_moment_and_zero():
    s = ap_series(E0, 5)
    assert abs(f_ms(s, 2, 1, 5).value - mpmath.mpf("0.57581001244288")) < 1e-13
    assert f_new(s, 3).value == 0


def test_against_oracle_at_many_bounds(series):
    for cid, s in series.items():
        pairs = [(e.p, e.ap) for e in s.entries]
        for n in (10, 97, 1000, 12345, 20000):
            for m, sv in ((1, 1), (2, 1), (3, 0.5)):
                got = f_ms(s, m, sv, n).value
                want = f_oracle(pairs, n, m, sv)
                assert abs(got - want) <= 1e-12 * max(abs(want), mpmath.mpf(1e-30))


def test_unnormalized_is_n_times(series):
    s = series["E1"]
    a = f_ms(s, 1, 1, 5000, "paper")
    b = f_ms(s, 1, 1, 5000, "none")
    assert a.fixed_sum == b.fixed_sum
    with mpmath.workprec(256):
        assert abs(b.value / 5000 - a.value) < mpmath.mpf(2) ** -150


def test_exact_increment_between_bounds(series):
    # F(N2) N2 - F(N1) N1 is exactly the fixed-point sum over N1 < p <= N2
    s = series["E3"]
    lo, hi = f_ms_many(s, 1, 1, [1000, 5000])
    direct = f_ms(s, 1, 1, 5000)
    assert hi.fixed_sum == direct.fixed_sum
    assert hi.value == direct.value
    assert lo.fixed_sum == f_ms(s, 1, 1, 1000).fixed_sum


def test_f11_is_f_new_exactly(series):
    rng = random.Random(7)
    for _ in range(100):
        cid = rng.choice(sorted(series))
        n = rng.randint(2, 20000)
        assert f_ms(series[cid], 1, 1, n) == f_new(series[cid], n)


def test_insufficient_series():
    s = ap_series(E0, 100)
    with pytest.raises(InsufficientSeries):
        f_new(s, 101)
    with pytest.raises(ValueError):
        f_new(s, 50, normalization="other")


def test_schedule():
    assert schedule(10, 1.5, 3) == [10, 15, 23]
    assert schedule(1000, 10, 4) == [1000, 10000, 100000, 1000000]
    assert schedule(2, 1.2, 3) == [2, 3]          # 2.4 -> 2, 2.88 -> 3: one duplicate dropped
    with pytest.raises(DegenerateSchedule):
        schedule(2, 1.1, 2)
    with pytest.raises(ValueError):
        schedule(10, 1, 3)


def _synthetic(r, logc=math.log(2.0), bounds=(1000, 10000, 100000, 1000000)):
    return [FSample(n, mpmath.exp(logc) * mpmath.log(n) ** r) for n in bounds]


@pytest.mark.parametrize("r", [0, 1, 2, 3, 4])
def test_fit_recovers_exponent(r):
    fit = fit_growth(_synthetic(r))
    assert abs(fit.rhat - r) < 1e-9
    assert abs(fit.logC - math.log(2)) < 1e-9
    assert fit.points_used == 4 and fit.excluded == 0
    assert rank_from_fit(fit) == r


def test_fit_two_points_has_infinite_stderr():
    fit = fit_growth(_synthetic(2, bounds=(100, 1000)))
    assert math.isinf(fit.stderr) and abs(fit.rhat - 2) < 1e-9


def test_fit_excludes_zeros():
    samples = _synthetic(1)
    samples[0] = FSample(samples[0].bound, mpmath.mpf(0))
    fit = fit_growth(samples)
    assert fit.excluded == 1 and fit.points_used == 3
    with pytest.raises(AllSamplesDegenerate):
        fit_growth([FSample(10, mpmath.mpf(0)), FSample(100, mpmath.mpf(0)),
                    FSample(1000, mpmath.mpf(1))])


def test_fit_uses_absolute_value():
    pos = fit_growth(_synthetic(3))
    neg = fit_growth([FSample(s.bound, -s.value) for s in _synthetic(3)])
    assert pos == neg


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 6), st.floats(-5, 5))
def test_fit_property(r, logc):
    fit = fit_growth(_synthetic(r, logc))
    assert abs(fit.rhat - r) < 1e-7
    assert abs(fit.logC - logc) < 1e-6


def test_estimate_rank_small(series):
    est = estimate_rank(lookup("E1").curve, n0=200, alpha=10, k=3, series=series["E1"])
    assert est.series_bound == 20000
    assert [s.bound for s in est.samples] == [200, 2000, 20000]
    d = est.diagnostics()
    assert set(d["fit"]) >= {"logC", "rhat", "stderr", "r2", "excluded"}
