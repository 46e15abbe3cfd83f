"""Certificates and deterministic report emission.

A certificate is one checked statement with the measured value and the
threshold it was held to. Reports are byte-stable: same certificates in,
same bytes out, in all three formats. No timestamps, no environment
details, keys sorted in the JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

SCHEMA_VERSION = 1

_CSV_COLUMNS = ("name", "statement", "value", "threshold", "pass")


@dataclass(frozen=True)
class Certificate:
    name: str
    statement: str
    value: float
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "statement": self.statement,
            "value": _jsonable(self.value),
            "threshold": _jsonable(self.threshold),
            "pass": self.passed,
        }


def _jsonable(x: float):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def render_json(certificates) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "certificates": [c.as_dict() for c in certificates],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def render_csv(certificates) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for c in certificates:
        writer.writerow(
            [c.name, c.statement, repr(float(c.value)),
             repr(float(c.threshold)), "pass" if c.passed else "fail"]
        )
    return buf.getvalue()


def render_text(certificates) -> str:
    lines = []
    width = max([len(c.name) for c in certificates], default=4)
    for c in certificates:
        status = "PASS" if c.passed else "FAIL"
        lines.append(
            f"{status}  {c.name:<{width}}  value={c.value:.6g}  "
            f"threshold={c.threshold:.6g}"
        )
        lines.append(f"      {c.statement}")
    passed = sum(1 for c in certificates if c.passed)
    lines.append(f"{passed}/{len(certificates)} certificates passed")
    return "\n".join(lines) + "\n"


def emit_report(certificates, out_dir) -> dict:
    """Write report.txt, certificates.json, certificates.csv; return paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    certificates = list(certificates)
    paths = {
        "text": out_dir / "report.txt",
        "json": out_dir / "certificates.json",
        "csv": out_dir / "certificates.csv",
    }
    paths["text"].write_text(render_text(certificates))
    paths["json"].write_text(render_json(certificates))
    paths["csv"].write_text(render_csv(certificates))
    return paths


def write_series(path, columns: dict) -> None:
    """Write named 1-D arrays of equal length as a delimited table."""
    names = list(columns)
    arrays = [columns[name] for name in names]
    length = len(arrays[0])
    for name, arr in zip(names, arrays):
        if len(arr) != length:
            raise ValueError(f"column {name!r} has length {len(arr)}, "
                             f"expected {length}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for i in range(length):
            writer.writerow([repr(float(arr[i])) for arr in arrays])
