"""
Result Writers
CSV / JSON output of study tables
"""

import json
import logging
from pathlib import Path
from typing import Dict

import pandas as pd

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"
CSV_HEADER_PREFIX = "# "


def write_table(table: pd.DataFrame, out_dir: Path, stem: str, fmt: str = "csv",
                metadata: Dict[str, object] = None) -> Path:
    """
    Write one task's table.

    CSV: UTF-8, "# metadata: {...}" and "# units: {...}" lines, then the header
    row and 17 significant digits. JSON: {"metadata", "units", "rows"}.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.{fmt}"
    units = table.attrs.get("units", {})
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(f"{CSV_HEADER_PREFIX}metadata: {json.dumps(metadata or {}, sort_keys=True)}\n")
            handle.write(f"{CSV_HEADER_PREFIX}units: {json.dumps(units, sort_keys=True)}\n")
            table.to_csv(handle, index=False, float_format=CSV_FLOAT_FORMAT)
    elif fmt == "json":
        rows = json.loads(table.to_json(orient="records", double_precision=15))
        document = {
            "metadata": metadata or {},
            "units": units,
            "rows": rows,
        }
        path.write_text(json.dumps(document, indent=2, sort_keys=True), encoding="utf-8")
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    logger.info(f"[OUTPUT] wrote {len(table)} rows to {path}")
    return path


def read_table(path: Path) -> pd.DataFrame:
    """Load a CSV written by write_table; header lines land in attrs["metadata"] and attrs["units"]."""
    path = Path(path)
    attrs = {}
    skip = 0
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith(CSV_HEADER_PREFIX):
                break
            key, _, value = line[len(CSV_HEADER_PREFIX):].partition(":")
            attrs[key.strip()] = json.loads(value)
            skip += 1
    table = pd.read_csv(path, skiprows=skip)
    table.attrs.update(attrs)
    return table
