"""CSV and JSON formats used on the command line."""

from __future__ import annotations

import csv
import io
import json
import math

from .decoy import INTENSITY_CLASSES, STATE_LABELS, CountsRecord
from .errors import ParseError

COUNTS_HEADER = ["state", "intensity", "sent", "ones"]
CURVE_HEADER = ["loss_db", "c_lower_bits", "method", "flag"]


def parse_counts(text: str) -> list[CountsRecord]:
    """Parse a ``state,intensity,sent,ones`` table.

    Raises:
        ParseError: with the offending line number.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip().lstrip("﻿") != ",".join(COUNTS_HEADER):
        raise ParseError(f"expected header {','.join(COUNTS_HEADER)!r}", line=1)
    records = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", line=lineno)
        state, intensity, sent, ones = fields
        if state not in STATE_LABELS:
            raise ParseError(f"unknown state {state!r}", line=lineno)
        if intensity not in INTENSITY_CLASSES:
            raise ParseError(f"unknown intensity class {intensity!r}", line=lineno)
        try:
            sent_i, ones_i = int(sent), int(ones)
        except ValueError:
            raise ParseError("sent and ones must be integers", line=lineno) from None
        if sent_i < 0 or ones_i < 0 or ones_i > sent_i:
            raise ParseError(f"need 0 <= ones <= sent, got sent={sent_i}, ones={ones_i}", line=lineno)
        if (state, intensity) in seen:
            raise ParseError(f"duplicate row for {state}/{intensity}", line=lineno)
        seen.add((state, intensity))
        records.append(CountsRecord(state, intensity, sent_i, ones_i))
    return records


def read_counts(path) -> list[CountsRecord]:
    with open(path, encoding="utf-8") as fh:
        return parse_counts(fh.read())


def format_counts(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COUNTS_HEADER)
    for r in records:
        w.writerow([r.state_label, r.intensity_class, r.sent, r.ones])
    return buf.getvalue()


def _num(x) -> str:
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return repr(float(x)) if isinstance(x, float) else str(x)


def format_curve(points) -> str:
    out = [",".join(CURVE_HEADER)]
    for p in points:
        out.append(f"{_num(float(p.loss_db))},{_num(float(p.c_lower_bits))},{p.method},{p.flag}")
    return "\n".join(out) + "\n"


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits; non-finite floats become null."""
    return _dump(obj, indent, 0) + "\n"


def _dump(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return format(obj, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_dump(str(k), indent, 0)}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _dump(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return _dump(obj.item(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")
