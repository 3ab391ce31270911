"""Deterministic CSV/JSON emission for result tables."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from typing import Iterable, Sequence

import mpmath

SCHEMA_VERSION = 1
SIG_DIGITS = 30


def fmt_real(v, digits: int = SIG_DIGITS) -> str:
    """Fixed rendering of a real with ``digits`` significant digits."""
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return mpmath.nstr(mpmath.mpf(v), digits, strip_zeros=False)


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (float, mpmath.mpf)):
        return fmt_real(v)
    return str(v)


def jsonable(v):
    """Convert nested results into plain JSON types (reals become strings)."""
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, (bool, int, str)) or v is None:
        return v
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (float, mpmath.mpf)):
        return fmt_real(v)
    if hasattr(v, "to_json"):
        return v.to_json()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def json_text(doc: dict, kind: str) -> str:
    body = {"schema_version": SCHEMA_VERSION, "kind": kind}
    body.update(jsonable(doc))
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def emit(text: str, path=None, stream=None) -> int:
    """Write ``text`` as UTF-8 to ``path`` (or ``stream``); returns bytes written."""
    data = text.encode("utf-8")
    if path is None:
        out = stream if stream is not None else None
        if out is None:
            import sys
            out = sys.stdout
        out.write(text)
        out.flush()
        return len(data)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)
