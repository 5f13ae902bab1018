"""CSV/JSON emission for BER and time-unit reports.

Floats use Python's shortest round-trip representation, lines end in LF,
and JSON holds one flat object per CSV row.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

BER_FIELDS = (
    "snr_db",
    "nt",
    "nr",
    "detector",
    "t_iters",
    "trials",
    "bit_errors",
    "ber",
    "ci_half_width",
)
TIME_UNIT_FIELDS = ("nt", "nr", "t_iters", "detector", "time_units")
FORMATS = ("csv", "json")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(rows: list[dict], fields, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(fields) + "\n")
        for r in rows:
            buf.write(",".join(_cell(r[f]) for f in fields) + "\n")
        return buf.getvalue()
    if fmt == "json":
        body = ",\n".join("  " + json.dumps({f: r[f] for f in fields}) for r in rows)
        return "[\n" + body + "\n]\n" if rows else "[]\n"
    raise ValueError(f"unknown format {fmt!r}")


def write_report(text: str, path) -> None:
    """Write ``text`` atomically: the target appears only once complete."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
