"""Built-in example curves, an LMFDB client and a file-based result cache."""
from __future__ import annotations

import hashlib
import json
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import List, Optional

from .curve import Curve, affine, is_on_curve, make_curve, rational_str
from .errors import CorruptCache, NetworkUnavailable, NotFound, SchemaMismatch


@dataclass(frozen=True)
class CurveRecord:
    id: str
    label: str
    ainvs: tuple
    claimed_rank: Optional[int]
    torsion_desc: str
    generators: tuple = ()
    torsion_points: tuple = ()
    provenance: str = ""
    notes: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def curve(self) -> Curve:
        return make_curve(*self.ainvs)

    def validate(self):
        c = self.curve
        for pt in self.generators + self.torsion_points:
            if not is_on_curve(c, pt):
                raise ValueError(f"{self.id}: {pt!r} is not on {c!r}")

    def to_json(self) -> dict:
        return {
            "id": self.id, "label": self.label,
            "ainvs": [rational_str(Fraction(a)) for a in self.ainvs],
            "claimed_rank": self.claimed_rank,
            "torsion_desc": self.torsion_desc,
            "generators": [p.to_json() for p in self.generators],
            "torsion_points": [p.to_json() for p in self.torsion_points],
            "provenance": self.provenance, "notes": self.notes,
            "metadata": dict(self.metadata),
        }


def _rec(id, label, ainvs, rank, tors, gens=(), torsion=(), prov="", notes="", **meta):
    return CurveRecord(id, label, tuple(Fraction(a) for a in ainvs), rank, tors,
                       tuple(affine(*g) for g in gens), tuple(affine(*t) for t in torsion),
                       prov, notes, meta)


_BUILTIN = (
    _rec("E0", "", (0, 0, 0, -1, 0), 0, "Z/2 x Z/2",
         torsion=((0, 0), (1, 0), (-1, 0)), prov="rank 0 example, y^2 = x^3 - x",
         notes="complex multiplication by Z[i]",
         L_value_at_1="0.655"),
    _rec("E2", "432.d1", (0, 0, 0, 0, -4), 1, "trivial",
         gens=((2, 2),), prov="rank 1 example, y^2 = x^3 - 4",
         notes="originally presented with rank 2; (0, 2) withdrawn as a generator"),
    _rec("E1", "83040.i1", (0, -1, 0, -10, -20), 2, "trivial",
         gens=((6, 10), (12, 38)), prov="rank 2 example, y^2 = x^3 - x^2 - 10x - 20",
         notes="originally presented with rank 1"),
    _rec("E3", "59450.a2", (1, 0, 1, -131, 558), 3, "Z/2",
         gens=((3, 12), (6, -4), (8, 2)), torsion=((7, -4),),
         prov="rank 3 example, y^2 + xy + y = x^3 - 131x + 558",
         notes="Cremona label 59450i1"),
    _rec("E8", "", (0, 0, 0, 5419, -407489), 8, "unknown",
         prov="rank 8 case study, y^2 = x^3 + 5419x - 407489",
         notes="no generators given; generator-based analyses are skipped"),
)


def builtin_catalog() -> List[CurveRecord]:
    for r in _BUILTIN:
        r.validate()
    return list(_BUILTIN)


def lookup(key: str) -> CurveRecord:
    for r in builtin_catalog():
        if key == r.id or (r.label and key == r.label):
            return r
    raise NotFound(f"no builtin curve {key!r}")


# -- LMFDB ----------------------------------------------------------------------

LMFDB_BASE = os.environ.get("ECEMBED_LMFDB_BASE", "https://www.lmfdb.org/api")
LMFDB_QUERY = "ec_curvedata/?lmfdb_label={label}&_format=json"


def _fixture_dir() -> Path:
    return Path(str(resources.files("ecembed") / "fixtures" / "lmfdb"))


def _fixture_name(label: str) -> str:
    return label.replace("/", "_") + ".json"


def parse_lmfdb_payload(label: str, payload) -> CurveRecord:
    """Map an ``ec_curvedata`` API response onto a CurveRecord."""
    try:
        rows = payload["data"]
    except (TypeError, KeyError):
        raise SchemaMismatch("payload has no 'data' list")
    if not isinstance(rows, list):
        raise SchemaMismatch("'data' is not a list")
    if not rows:
        raise NotFound(label)
    row = rows[0]
    try:
        ainvs = tuple(Fraction(int(a)) for a in row["ainvs"])
        rank = row.get("rank")
        tors = row.get("torsion_structure", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"unexpected curve row: {exc}")
    if len(ainvs) != 5:
        raise SchemaMismatch("ainvs must have five entries")
    desc = " x ".join(f"Z/{n}" for n in tors) if tors else "trivial"
    return CurveRecord(label, row.get("lmfdb_label", label), ainvs,
                       None if rank is None else int(rank), desc,
                       provenance="LMFDB ec_curvedata")


def fetch_lmfdb(label: str, mode: str = "fixture", timeout: float = 10.0,
                base: str = None, fixture_dir=None) -> CurveRecord:
    if mode == "fixture":
        path = Path(fixture_dir) if fixture_dir else _fixture_dir()
        f = path / _fixture_name(label)
        if not f.exists():
            raise NotFound(label)
        return parse_lmfdb_payload(label, json.loads(f.read_bytes()))
    if mode != "network":
        raise ValueError("mode must be 'network' or 'fixture'")
    import requests
    url = f"{(base or LMFDB_BASE).rstrip('/')}/{LMFDB_QUERY.format(label=label)}"
    try:
        resp = requests.get(url, timeout=timeout)
    except requests.RequestException as exc:
        raise NetworkUnavailable(str(exc))
    if resp.status_code == 404:
        raise NotFound(label)
    if resp.status_code != 200:
        raise NetworkUnavailable(f"HTTP {resp.status_code} from {url}")
    try:
        payload = resp.json()
    except ValueError:
        raise SchemaMismatch("response is not JSON")
    return parse_lmfdb_payload(label, payload)


def consistency_report(record: CurveRecord, fetched: CurveRecord) -> dict:
    return {"id": record.id, "label": fetched.label,
            "ainvs_match": tuple(record.ainvs) == tuple(fetched.ainvs),
            "rank_match": (record.claimed_rank == fetched.claimed_rank
                           if fetched.claimed_rank is not None else None)}


# -- cache ----------------------------------------------------------------------

CACHE_VERSION = 1
CACHE_ENV = "ECEMBED_CACHE_DIR"


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "ecembed"))


def _param_hash(params: dict) -> str:
    blob = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def cache_path(root, curve_id: str, computation: str, params: dict) -> Path:
    return Path(root) / "cache" / curve_id / computation / f"{_param_hash(params)}.json"


def cache_store(root, curve_id: str, computation: str, params: dict, payload: str) -> Path:
    """Store ``payload`` (text) under a content-addressed, versioned file."""
    from filelock import FileLock
    path = cache_path(root, curve_id, computation, params)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {"version": CACHE_VERSION, "curve_id": curve_id,
              "computation": computation, "params": params}
    body = json.dumps({"header": header, "payload": payload}, sort_keys=True)
    digest = hashlib.sha256(body.encode()).hexdigest()
    with FileLock(str(path) + ".lock"):
        tmp = path.with_suffix(".tmp")
        tmp.write_text(body + "\n" + digest + "\n", encoding="utf-8")
        os.replace(tmp, path)
    return path


def _read_checked(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    body, sep, rest = text.rstrip("\n").rpartition("\n")
    if not sep or hashlib.sha256(body.encode()).hexdigest() != rest.strip():
        raise CorruptCache(str(path))
    try:
        return json.loads(body)
    except ValueError:
        raise CorruptCache(str(path))


def cache_load(root, curve_id: str, computation: str, params: dict) -> Optional[str]:
    """Stored payload, or None on a miss (absent, stale version, corrupt)."""
    path = cache_path(root, curve_id, computation, params)
    if not path.exists():
        return None
    try:
        doc = _read_checked(path)
    except CorruptCache:
        warnings.warn(f"corrupt cache entry {path}; ignoring")
        return None
    h = doc.get("header", {})
    if (h.get("version") != CACHE_VERSION or h.get("params") != params
            or h.get("curve_id") != curve_id or h.get("computation") != computation):
        return None
    return doc["payload"]
