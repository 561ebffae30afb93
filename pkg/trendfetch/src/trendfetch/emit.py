"""trends.csv emission in the shared dataset schema.

The whole batch is validated before the file is opened: a schema
violation aborts with nothing written. Zero rows produce a header-only
file. Values are written as plain integers when integral and as their
shortest exact decimal otherwise, so a downstream parse reproduces them
bit for bit.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .errors import SchemaError
from .fetcher import SampleRow
from .jobs import ATTRIBUTES, WEEKS

HEADER = ["id", "attribute", "week_index", "value", "sample_index"]


def _format_value(v: float) -> str:
    return str(int(v)) if v == int(v) else repr(v)


def emit_csv(rows, path) -> Path:
    """Write validated sample rows to ``path`` in the dataset schema."""
    rows = list(rows)
    seen = set()
    for r in rows:
        if not isinstance(r, SampleRow):
            raise SchemaError(f"expected a SampleRow, got {type(r).__name__}")
        if r.attribute not in ATTRIBUTES:
            raise SchemaError(f"{r.product_id}: unknown attribute {r.attribute!r}")
        if not 0 <= r.week_index < WEEKS:
            raise SchemaError(
                f"{r.product_id}/{r.attribute}: week_index {r.week_index} "
                f"outside [0, {WEEKS - 1}]")
        if not 0.0 <= r.value <= 100.0:
            raise SchemaError(
                f"{r.product_id}/{r.attribute}: value {r.value!r} outside [0, 100]")
        if r.sample_index < 0:
            raise SchemaError(f"{r.product_id}: negative sample_index")
        key = (r.product_id, r.attribute, r.week_index, r.sample_index)
        if key in seen:
            raise SchemaError(
                "duplicate row for (id, attribute, week_index, sample_index) "
                f"= {key}")
        seen.add(key)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for r in rows:
            writer.writerow([r.product_id, r.attribute, r.week_index,
                             _format_value(r.value), r.sample_index])
    return path
