"""CSV/JSON emitters with platform-stable float formatting."""

import csv
import json
import math
from fractions import Fraction

SIG_DIGITS = 12


def format_value(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return f"{x:.{SIG_DIGITS}g}"
    if x is None:
        return ""
    return str(x)


def _json_value(x):
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(x, int) and not isinstance(x, bool) and abs(x) >= 2 ** 53:
        return str(x)
    return x


def write_csv(rows, columns, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])


def write_json(rows, columns, stream, meta=None):
    doc = {"columns": list(columns), "rows": [{c: _json_value(r.get(c)) for c in columns} for r in rows]}
    if meta:
        doc["meta"] = {k: _json_value(v) for k, v in meta.items()}
    json.dump(doc, stream, indent=2, sort_keys=False)
    stream.write("\n")


def write(rows, columns, stream, fmt="csv", meta=None):
    if fmt == "csv":
        write_csv(rows, columns, stream)
    elif fmt == "json":
        write_json(rows, columns, stream, meta)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def write_cdf(cdf, stream):
    """Plot-ready two-column ``x,F(x)`` data at the distinct sample points."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["x", "F"])
    for x, F in cdf.rows():
        writer.writerow([format_value(float(x)), format_value(float(F))])
