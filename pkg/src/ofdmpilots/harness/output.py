"""CSV emission."""
from __future__ import annotations

import csv
import io

import numpy as np
from dataclasses import astuple, fields

from .sweeps import Row, SweepResult

COLUMNS = [f.name for f in fields(Row)]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in result.rows:
        w.writerow([_cell(v) for v in astuple(r)])
    return buf.getvalue()


def emit_csv(result: SweepResult, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(to_csv(result))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV to {path}: {exc.strerror}") from exc
