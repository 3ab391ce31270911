"""Command-line entry point.

Every subcommand writes a CSV or JSON table to stdout (or ``--out``).  Option
values come from, in decreasing priority, command-line flags, a JSON file
given with ``--config`` (keys are the long option names with ``_`` for
``-``), and the built-in defaults in ``DEFAULTS``.

Exit codes: 0 success, 1 usage error, 2 computation or IO error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

from . import catalog, tables
from .curve import Curve, Point, affine, is_on_curve, make_curve, torsion_order
from .errors import EcEmbedError

DEFAULTS = {
    "format": "csv", "out": None, "workers": 1, "seed": 0, "cache_dir": None,
    "lmfdb_mode": "fixture", "pmax": 1000, "nmax": None, "n0": 1000, "alpha": 10,
    "k": 4, "m": 1, "s": 1, "normalization": "paper", "c_factor": 4.0,
    "floor_bits": 128, "bits": 128, "loop_n": 10, "height_tol": 1e-20,
    "curves": "E0,E2,E1,E3", "point": None, "points": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# -- argument parsing -----------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--config", help="JSON file of option defaults (flags override it)")
    g.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    g.add_argument("--out", help="output file (default stdout)")
    g.add_argument("--workers", type=int, help="processes for a_p computation (default 1)")
    g.add_argument("--seed", type=int, help="seed for randomized sampling (default 0)")
    g.add_argument("--cache-dir", dest="cache_dir",
                   help=f"result cache directory (default: ${catalog.CACHE_ENV}; unset means no cache)")
    g.add_argument("--lmfdb-mode", dest="lmfdb_mode", choices=("fixture", "network"),
                   help="where `catalog fetch` reads from (default fixture)")
    return p


def _curve_arg(p):
    p.add_argument("--curve", required=True,
                   help="catalog id (E0..E8), label, or a-invariants 'a1,a2,a3,a4,a6'")


def _schedule_args(p):
    p.add_argument("--n0", type=int, help="first bound N (default 1000)")
    p.add_argument("--alpha", type=float, help="bound ratio between samples (default 10)")
    p.add_argument("--k", type=int, help="number of bounds (default 4)")


def _stat_args(p, moment: bool):
    if moment:
        p.add_argument("--m", type=int, help="power of a_p (default 1)")
        p.add_argument("--s", type=float, help="weight exponent: terms are divided by p^(s/2) (default 1)")
    p.add_argument("--normalization", choices=("paper", "none"),
                   help="'paper' divides the sum by N, 'none' does not (default paper)")


def _precision_args(p):
    p.add_argument("--c-factor", dest="c_factor", type=float,
                   help="bits per unit of canonical height, in [1, 16] (default 4)")
    p.add_argument("--floor-bits", dest="floor_bits", type=int,
                   help="minimum working precision in bits (default 128)")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    top = _Parser(prog="ecembed", description=__doc__.split("\n\n")[0],
                  formatter_class=argparse.RawDescriptionHelpFormatter,
                  epilog="exit codes: 0 ok, 1 usage error, 2 computation error")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ap", parents=[common], help="trace of Frobenius a_p for p <= pmax",
                       description="Table p, a_p, good/bad, reduction type for every prime p <= pmax.")
    _curve_arg(p)
    p.add_argument("--pmax", type=int, help="largest prime considered (default 1000)")

    for name, moment in (("fnew", False), ("fms", True)):
        p = sub.add_parser(
            name, parents=[common],
            help="F statistic at scheduled bounds" if moment else "F_new at scheduled bounds",
            description=("Rows N, F, log N, log log N.  With --nmax only N = nmax is "
                         "reported, otherwise the geometric schedule n0 * alpha^i, i < k."))
        _curve_arg(p)
        p.add_argument("--nmax", type=int, help="single bound N (overrides the schedule)")
        _schedule_args(p)
        _stat_args(p, moment)

    p = sub.add_parser("rank-est", parents=[common], help="fit the growth exponent and estimate rank",
                       description="CSV: the F table.  JSON: table, fit {logC, rhat, stderr, r2, excluded} and rank.")
    _curve_arg(p)
    _schedule_args(p)
    _stat_args(p, True)

    p = sub.add_parser("embed", parents=[common], help="embed one point in [0,1]^2 x torus",
                       description="The four coordinates of a single point, at --bits precision.")
    _curve_arg(p)
    p.add_argument("--point", required=True, help="'x,y' with rational entries, or 'O'")
    p.add_argument("--bits", type=int, help="working precision in bits (default 128)")

    p = sub.add_parser("loops", parents=[common], help="embedded multiples nP and loop rank",
                       description=("Embeds nP for |n| <= loop-n.  CSV: the samples.  JSON: "
                                    "samples per point plus the loop rank of the point set."))
    _curve_arg(p)
    p.add_argument("--points", help="';'-separated points (default: catalog generators)")
    p.add_argument("--loop-n", dest="loop_n", type=int, help="largest |n| (default 10)")
    _precision_args(p)

    p = sub.add_parser("heights", parents=[common], help="canonical heights, Gram matrix, regulator",
                       description="Heights use the doubling limit lim h(x(2^n P)) / 4^n (natural log).")
    _curve_arg(p)
    p.add_argument("--points", help="';'-separated points (default: catalog generators)")
    p.add_argument("--height-tol", dest="height_tol", type=float,
                   help="stop when successive estimates differ by at most this (default 1e-20)")

    p = sub.add_parser("torsion", parents=[common], help="orders of points (infinite order is blank/null)",
                       description="Default points: the catalog's torsion points and generators.")
    _curve_arg(p)
    p.add_argument("--points", help="';'-separated points")

    p = sub.add_parser("catalog", parents=[common], help="built-in curves and LMFDB lookups",
                       description="list: all records; show KEY: one record; fetch LABEL: LMFDB record "
                                   "with a consistency check against the builtin one.")
    p.add_argument("action", choices=("list", "show", "fetch"))
    p.add_argument("key", nargs="?", help="catalog id or label (show, fetch)")

    p = sub.add_parser("report", parents=[common], help="full per-curve bundle",
                       description=("For each curve: a_p Hasse summary, F table, fit, rank estimate "
                                    "(recorded against the claimed rank, not enforced), torsion "
                                    "orders, heights and loop rank of the generators."))
    p.add_argument("--curves", help="comma-separated catalog ids (default E0,E2,E1,E3)")
    _schedule_args(p)
    _stat_args(p, True)
    p.add_argument("--floor-bits", dest="floor_bits", type=int,
                   help="precision for the loop-rank test in bits (default 128)")
    return top


class Options:
    """Resolved option values: flags, then config file, then DEFAULTS."""

    def __init__(self, ns: argparse.Namespace, config: dict):
        self._ns = ns
        self._config = config

    def __getattr__(self, name):
        v = getattr(self._ns, name, None)
        if v is not None:
            return v
        if name in self._config:
            return self._config[name]
        if name == "cache_dir":
            return os.environ.get(catalog.CACHE_ENV)
        return DEFAULTS.get(name)


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}")
    except ValueError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return cfg


# -- helpers --------------------------------------------------------------------

def resolve_curve(sel: str):
    """(Curve, CurveRecord or None) from an id, a label or inline a-invariants."""
    try:
        rec = catalog.lookup(sel)
        return rec.curve, rec
    except EcEmbedError:
        pass
    parts = sel.strip("[]() ").split(",")
    if len(parts) not in (2, 5):
        raise UsageError(f"unknown curve {sel!r}")
    try:
        vals = [Fraction(v.strip()) for v in parts]
    except ValueError:
        raise UsageError(f"cannot parse a-invariants {sel!r}")
    if len(vals) == 2:
        vals = [0, 0, 0] + vals
    return make_curve(*vals), None


def parse_point(c: Curve, text: str) -> Point:
    text = text.strip()
    if text in ("O", "0", "inf"):
        return Point(None, None)
    try:
        xs, ys = text.strip("()").split(",")
        pt = affine(Fraction(xs.strip()), Fraction(ys.strip()))
    except ValueError:
        raise UsageError(f"cannot parse point {text!r}; expected 'x,y'")
    if not is_on_curve(c, pt):
        raise UsageError(f"point {text} is not on the curve")
    return pt


def _points(c, rec, text, default_attr="generators") -> List[Point]:
    if text:
        return [parse_point(c, t) for t in text.split(";") if t.strip()]
    if rec is None:
        raise UsageError("--points is required for curves outside the catalog")
    return list(getattr(rec, default_attr))


def _check_positive(**kw):
    for k, v in kw.items():
        if v is None or v < 1:
            raise UsageError(f"--{k.replace('_', '-')} must be a positive integer")


def _bounds(o) -> List[int]:
    from .fstat import schedule
    if o.nmax is not None:
        _check_positive(nmax=o.nmax)
        return [o.nmax]
    return schedule(o.n0, o.alpha, o.k)


def _alpha(o):
    a = o.alpha
    return int(a) if float(a).is_integer() else a


def _series(c, n, o):
    from .report import cached_ap_series
    return cached_ap_series(c, n, o.workers, o.cache_dir)


# -- subcommands ----------------------------------------------------------------

def cmd_ap(o):
    c, _ = resolve_curve(o.curve)
    _check_positive(pmax=o.pmax)
    s = _series(c, o.pmax, o)
    if o.format == "csv":
        return tables.csv_text(["p", "ap", "status", "reduction"], s.rows())
    return tables.json_text({"curve": c.to_json(), "bound": s.bound,
                             "rows": [dict(zip(("p", "ap", "status", "reduction"), r))
                                      for r in s.rows()]}, "ap_series")


def _f_table(samples):
    return [list(smp.row()) for smp in samples]


def cmd_f(o, moment: bool):
    from .fstat import f_ms_many
    c, _ = resolve_curve(o.curve)
    m, s = (o.m, o.s) if moment else (1, 1)
    if m < 0:
        raise UsageError("--m must be nonnegative")
    bounds = _bounds(o)
    series = _series(c, max(bounds), o)
    samples = f_ms_many(series, m, s, bounds, o.normalization)
    header = ["N", "F", "logN", "loglogN"]
    if o.format == "csv":
        return tables.csv_text(header, _f_table(samples))
    return tables.json_text({"curve": c.to_json(), "m": m, "s": s,
                             "normalization": o.normalization, "columns": header,
                             "rows": _f_table(samples)}, "f_samples")


def cmd_rank_est(o):
    from .fstat import estimate_rank
    c, _ = resolve_curve(o.curve)
    if o.m < 1:
        raise UsageError("rank estimation needs --m >= 1")
    from .fstat import schedule
    bounds = schedule(o.n0, o.alpha, o.k)
    est = estimate_rank(c, o.n0, _alpha(o), o.k, o.m, o.s, o.normalization,
                        series=_series(c, bounds[-1], o))
    if o.format == "csv":
        return tables.csv_text(["N", "F", "logN", "loglogN"], est.table())
    return tables.json_text({"curve": c.to_json(), "m": o.m, "s": o.s,
                             "normalization": o.normalization,
                             **est.diagnostics()}, "rank_estimate")


def cmd_embed(o):
    from .lattice import embed, periods
    c, _ = resolve_curve(o.curve)
    pt = parse_point(c, o.point)
    bits = o.bits
    _check_positive(bits=bits)
    e = embed(c, periods(c, bits), pt)
    row = list(e.as_tuple())
    if o.format == "csv":
        return tables.csv_text(["f1", "f2", "f3", "f4"], [row])
    return tables.json_text({"curve": c.to_json(), "point": pt.to_json(),
                             "precision_bits": bits, "phi": row}, "embedding")


def cmd_loops(o):
    from .lattice import distinct_points, loop_rank, sample_loop
    c, rec = resolve_curve(o.curve)
    pts = _points(c, rec, o.points)
    _check_positive(loop_n=o.loop_n, floor_bits=o.floor_bits)
    per_point = [(pt, sample_loop(c, pt, o.loop_n, o.c_factor, o.floor_bits)) for pt in pts]
    if o.format == "csv":
        rows = [[i, smp.n] + list(smp.point.as_tuple())
                for i, (_, samples) in enumerate(per_point) for smp in samples]
        return tables.csv_text(["point", "n", "f1", "f2", "f3", "f4"], rows)
    count, rels = loop_rank(c, pts, o.floor_bits) if pts else (0, [])
    return tables.json_text({
        "curve": c.to_json(),
        "loops": [{"point": pt.to_json(), "torsion_order": torsion_order(c, pt),
                   "distinct": len(distinct_points([s.point for s in samples])),
                   "samples": [{"n": s.n, "precision_bits": s.point.precision_bits,
                                "phi": list(s.point.as_tuple())} for s in samples]}
                  for pt, samples in per_point],
        "loop_rank": count, "relations": rels}, "loops")


def cmd_heights(o):
    from .heights import gram_and_regulator
    c, rec = resolve_curve(o.curve)
    pts = _points(c, rec, o.points)
    hd = gram_and_regulator(c, pts, o.height_tol)
    if o.format == "csv":
        return tables.csv_text(["i", "j", "pairing"],
                               [[i, j, hd.gram[i][j]] for i in range(len(pts))
                                for j in range(len(pts))])
    return tables.json_text({"curve": c.to_json(), **hd.to_json()}, "heights")


def cmd_torsion(o):
    c, rec = resolve_curve(o.curve)
    if o.points:
        pts = _points(c, rec, o.points)
    elif rec is not None:
        pts = list(rec.torsion_points) + list(rec.generators)
    else:
        raise UsageError("--points is required for curves outside the catalog")
    orders = [torsion_order(c, pt) for pt in pts]
    if o.format == "csv":
        label = lambda pt: "O" if pt.is_infinity else ",".join(pt.to_json())
        return tables.csv_text(["point", "order"],
                               [[label(pt), "" if n is None else n] for pt, n in zip(pts, orders)])
    return tables.json_text({"curve": c.to_json(),
                             "points": [{"point": pt.to_json(), "order": n}
                                        for pt, n in zip(pts, orders)]}, "torsion")


def cmd_catalog(o):
    if o.action == "list":
        recs = catalog.builtin_catalog()
        if o.format == "csv":
            return tables.csv_text(
                ["id", "label", "ainvs", "claimed_rank", "torsion", "generators"],
                [[r.id, r.label, " ".join(r.to_json()["ainvs"]),
                  "" if r.claimed_rank is None else r.claimed_rank,
                  r.torsion_desc, len(r.generators)] for r in recs])
        return tables.json_text({"curves": [r.to_json() for r in recs]}, "catalog")
    if not o.key:
        raise UsageError(f"catalog {o.action} needs a KEY")
    if o.action == "show":
        return tables.json_text(catalog.lookup(o.key).to_json(), "curve_record")
    fetched = catalog.fetch_lmfdb(o.key, mode=o.lmfdb_mode)
    doc = {"record": fetched.to_json()}
    try:
        doc["consistency"] = catalog.consistency_report(catalog.lookup(o.key), fetched)
    except EcEmbedError:
        doc["consistency"] = None
    return tables.json_text(doc, "lmfdb_record")


def cmd_report(o):
    from .report import report
    ids = [s.strip() for s in o.curves.split(",") if s.strip()]
    recs = [catalog.lookup(i) for i in ids]
    doc = report(recs, n0=o.n0, alpha=_alpha(o), k=o.k, m=o.m, s=o.s,
                 normalization=o.normalization, workers=o.workers,
                 precision_bits=o.floor_bits, cache_dir=o.cache_dir)
    doc["parameters"]["seed"] = o.seed
    if o.format == "json":
        return tables.json_text(doc, "report")
    rows = []
    for cr in doc["curves"]:
        fit = cr.get("fit") or {}
        lr = cr.get("loop_rank") or {}
        hd = cr.get("heights") or {}
        rows.append([cr["id"], cr["label"],
                     "" if cr["claimed_rank"] is None else cr["claimed_rank"],
                     fit.get("rhat", ""), fit.get("stderr", ""), fit.get("r2", ""),
                     cr.get("rank_estimate", ""), hd.get("rank", ""), lr.get("rank", ""),
                     cr["ap"]["hasse_ok"]])
    return tables.csv_text(["id", "label", "claimed_rank", "rhat", "stderr", "r2",
                            "rank_estimate", "gram_rank", "loop_rank", "hasse_ok"],
                           [[("" if v is None else v) for v in r] for r in rows])


COMMANDS = {
    "ap": cmd_ap, "fnew": lambda o: cmd_f(o, False), "fms": lambda o: cmd_f(o, True),
    "rank-est": cmd_rank_est, "embed": cmd_embed, "loops": cmd_loops,
    "heights": cmd_heights, "torsion": cmd_torsion, "catalog": cmd_catalog,
    "report": cmd_report,
}


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        try:
            ns = parser.parse_args(argv)
        except SystemExit as exc:  # --help
            return 0 if not exc.code else 1
        o = Options(ns, _load_config(ns.config))
        if o.workers < 1:
            raise UsageError("--workers must be >= 1")
        text = COMMANDS[ns.command](o)
        tables.emit(text, o.out, stdout)
        return 0
    except UsageError as exc:
        print(f"ecembed: error: {exc}", file=stderr)
        return 1
    except Exception as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"ecembed: {type(exc).__name__}: {msg}", file=stderr)
        return 2


def main() -> None:
    sys.exit(run())
