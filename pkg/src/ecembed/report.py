"""Per-curve bundles: a_p checks, F tables and fits, heights and loop ranks."""
from __future__ import annotations

import math
from typing import Sequence

from .catalog import CurveRecord, cache_load, cache_store
from .curve import torsion_order
from .errors import EcEmbedError
from .fstat import f_ms_many, fit_growth, rank_from_fit, schedule
from .heights import gram_and_regulator
from .lattice import loop_rank
from .modp import ApSeries, ap_series


def cached_ap_series(record_curve, n: int, workers: int = 1, cache_dir=None) -> ApSeries:
    if cache_dir is None:
        return ap_series(record_curve, n, workers)
    params = {"n": n}
    hit = cache_load(cache_dir, record_curve.curve_id, "ap_series", params)
    if hit is not None:
        return ApSeries.from_json(hit)
    s = ap_series(record_curve, n, workers)
    cache_store(cache_dir, record_curve.curve_id, "ap_series", params, s.to_json())
    return s


def hasse_summary(series: ApSeries) -> dict:
    worst = 0.0
    ok = True
    for e in series.entries:
        if e.bad:
            ok &= e.ap in (-1, 0, 1)
            continue
        ok &= e.ap * e.ap <= 4 * e.p
        worst = max(worst, abs(e.ap) / (2 * math.sqrt(e.p)))
    return {"primes": len(series), "bad_primes": [e.p for e in series.entries if e.bad],
            "hasse_ok": ok, "max_ratio": worst}


def curve_report(rec: CurveRecord, n0: int = 1000, alpha=10, k: int = 4, m: int = 1,
                 s=1, normalization: str = "paper", workers: int = 1,
                 precision_bits: int = 128, cache_dir=None) -> dict:
    c = rec.curve
    bounds = schedule(n0, alpha, k)
    series = cached_ap_series(c, bounds[-1], workers, cache_dir)
    samples = f_ms_many(series, m, s, bounds, normalization)
    out = {"id": rec.id, "label": rec.label, "curve": c.to_json(),
           "claimed_rank": rec.claimed_rank, "ap": hasse_summary(series),
           "table": [list(smp.row()) for smp in samples]}
    try:
        fit = fit_growth(samples)
        est = rank_from_fit(fit, m) if m >= 1 else None
        out["fit"] = fit.to_json()
        out["rank_estimate"] = est
        out["rank_estimate_matches_claim"] = (est == rec.claimed_rank
                                              if rec.claimed_rank is not None else None)
    except EcEmbedError as exc:
        out["fit"] = None
        out["fit_error"] = f"{type(exc).__name__}: {exc}"
    out["torsion"] = [{"point": p.to_json(), "order": torsion_order(c, p)}
                      for p in rec.torsion_points]
    if rec.generators:
        hd = gram_and_regulator(c, rec.generators)
        out["heights"] = hd.to_json()
        try:
            lr, rels = loop_rank(c, rec.generators, precision_bits)
            out["loop_rank"] = {"rank": lr, "relations": rels}
        except EcEmbedError as exc:
            out["loop_rank"] = {"error": f"{type(exc).__name__}: {exc}"}
    else:
        out["heights"] = None
        out["loop_rank"] = None
        out["skipped"] = "no generators listed; height and loop analyses skipped"
    return out


def report(records: Sequence[CurveRecord], **kw) -> dict:
    return {"curves": [curve_report(r, **kw) for r in records],
            "parameters": {k: v for k, v in sorted(kw.items())
                           if k not in ("workers", "cache_dir")}}
