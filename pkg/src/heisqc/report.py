"""Structured scan results and their JSON/CSV export."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


@dataclass
class ScanReport:
    """Per-cell values of a verification scan plus a summary and verdict."""

    name: str
    params: dict = field(default_factory=dict)
    cells: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    passed: bool | None = None

    def add(self, **row) -> None:
        self.cells.append(row)

    def column(self, key: str) -> np.ndarray:
        return np.array([row[key] for row in self.cells], dtype=float)

    def as_dict(self) -> dict:
        summary = dict(self.summary)
        if self.passed is not None:
            summary["pass"] = bool(self.passed)
        return _plain({"experiment": self.name, "params": self.params,
                       "cells": self.cells, "summary": summary})

    def to_json(self) -> str:
        return dumps(self.as_dict())

    def to_csv(self) -> str:
        return rows_to_csv(self.cells)


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def rows_to_csv(rows) -> str:
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_value(row.get(k, "")) for k in columns})
    return buf.getvalue()


def _csv_value(v):
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return v
