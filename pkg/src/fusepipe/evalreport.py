"""Accuracy metrics, report tables, and canonical report serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, IncompleteReport, LabelOutOfRange, LengthMismatch

REPORT_FORMAT_VERSION = 1


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"shapes differ: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise EmptyInput("cannot score empty predictions")
    return float(np.mean(y_true == y_pred))


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Counts M[i, j] of samples with true class i predicted as j."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"shapes differ: {y_true.shape} vs {y_pred.shape}")
    for arr, name in ((y_true, "true"), (y_pred, "predicted")):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise LabelOutOfRange(f"{name} labels outside [0, {n_classes})")
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (y_true, y_pred), 1)
    return m


@dataclass
class RunReport:
    """One accuracy table: rows x columns of cells plus run provenance."""

    dataset_tag: str
    variant: str
    table_kind: str  # single | fusion | vote
    row_labels: list[str]
    col_labels: list[str]
    cells: dict  # (row, col) -> accuracy in [0, 1]
    master_seed: int = 0
    config_hash: str = ""
    starred_rows: list[str] = field(default_factory=list)

    def __post_init__(self):
        for key, v in self.cells.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"cell {key} value {v} outside [0, 1]")

    def cell_matrix(self) -> np.ndarray:
        try:
            return np.array(
                [[self.cells[(r, c)] for c in self.col_labels] for r in self.row_labels]
            )
        except KeyError as exc:
            raise IncompleteReport(f"missing cell {exc.args[0]}") from exc

    def row_averages(self) -> dict[str, float]:
        m = self.cell_matrix()
        return {r: float(v) for r, v in zip(self.row_labels, m.mean(axis=1))}

    def col_averages(self) -> dict[str, float]:
        m = self.cell_matrix()
        return {c: float(v) for c, v in zip(self.col_labels, m.mean(axis=0))}

    def to_json(self) -> str:
        doc = {
            "format_version": REPORT_FORMAT_VERSION,
            "dataset_tag": self.dataset_tag,
            "variant": self.variant,
            "table_kind": self.table_kind,
            "row_labels": self.row_labels,
            "col_labels": self.col_labels,
            "cells": {r: {c: self.cells[(r, c)] for c in self.col_labels if (r, c) in self.cells}
                      for r in self.row_labels},
            "master_seed": self.master_seed,
            "config_hash": self.config_hash,
            "starred_rows": self.starred_rows,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        doc = json.loads(text)
        if doc.get("format_version") != REPORT_FORMAT_VERSION:
            raise ValueError(f"unsupported report format {doc.get('format_version')!r}")
        cells = {
            (r, c): v for r, rowdict in doc["cells"].items() for c, v in rowdict.items()
        }
        return cls(
            dataset_tag=doc["dataset_tag"],
            variant=doc["variant"],
            table_kind=doc["table_kind"],
            row_labels=list(doc["row_labels"]),
            col_labels=list(doc["col_labels"]),
            cells=cells,
            master_seed=doc["master_seed"],
            config_hash=doc["config_hash"],
            starred_rows=list(doc["starred_rows"]),
        )


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def make_table(report: RunReport, format: str = "markdown") -> str:
    """Render the report grid with a trailing Average row and column, values
    at 4 decimals, and starred top rows when the report carries a ranking."""
    m = report.cell_matrix()  # raises IncompleteReport when a cell is absent
    row_avg = m.mean(axis=1)
    col_avg = m.mean(axis=0)
    grand = m.mean()

    def row_label(r):
        return f"{r} *" if r in report.starred_rows else r

    head = [_row_header_name(report.table_kind)] + list(report.col_labels) + ["Average"]
    body = []
    for i, r in enumerate(report.row_labels):
        body.append([row_label(r)] + [_fmt(v) for v in m[i]] + [_fmt(row_avg[i])])
    body.append(["Average"] + [_fmt(v) for v in col_avg] + [_fmt(grand)])

    if format == "csv":
        return "\n".join(",".join(cell for cell in row) for row in [head] + body) + "\n"
    if format != "markdown":
        raise ValueError(f"unknown format {format!r}")
    widths = [max(len(row[j]) for row in [head] + body) for j in range(len(head))]
    lines = [
        "| " + " | ".join(h.ljust(w) for h, w in zip(head, widths)) + " |",
        "|" + "|".join("-" * (w + 2) for w in widths) + "|",
    ]
    for row in body:
        lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |")
    return "\n".join(lines) + "\n"


def _row_header_name(table_kind: str) -> str:
    return {
        "single": "feature set",
        "fusion": "fused feature sets",
        "vote": "classifier ensemble",
    }.get(table_kind, "row")
