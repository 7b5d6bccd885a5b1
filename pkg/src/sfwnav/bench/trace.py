"""Episode traces: one CSV row per physics step plus a JSON sidecar."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

BASE_COLUMNS = ("t", "x", "y", "theta", "v", "w")


@dataclass
class Trace:
    rows: np.ndarray  # (T, 6 + 2 * n_peds)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.ndim != 2 or self.rows.shape[1] < len(BASE_COLUMNS):
            raise ValueError("trace rows must be a (T, 6 + 2P) table")

    def __len__(self):
        return len(self.rows)

    @property
    def n_peds(self) -> int:
        return (self.rows.shape[1] - len(BASE_COLUMNS)) // 2

    @property
    def columns(self) -> list:
        cols = list(BASE_COLUMNS)
        for i in range(self.n_peds):
            cols += [f"p{i}_x", f"p{i}_y"]
        return cols

    def robot_xy(self) -> np.ndarray:
        return self.rows[:, 1:3]

    def ped_xy(self) -> np.ndarray:
        """(T, P, 2)"""
        return self.rows[:, len(BASE_COLUMNS):].reshape(len(self.rows), self.n_peds, 2)

    def path_length(self) -> float:
        xy = self.robot_xy()
        total = 0.0
        for (x0, y0), (x1, y1) in zip(xy[:-1].tolist(), xy[1:].tolist()):
            total += math.hypot(x1 - x0, y1 - y0)
        return total


def write_trace(trace: Trace, csv_path, meta_path=None):
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(trace.columns)
        for row in trace.rows:
            w.writerow([repr(float(v)) for v in row])
    meta_path = Path(meta_path) if meta_path else sidecar_path(csv_path)
    meta_path.write_text(json.dumps(trace.meta, indent=2, sort_keys=True) + "\n")


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".json")


def read_trace(csv_path) -> Trace:
    csv_path = Path(csv_path)
    with csv_path.open(newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header[:6]) != BASE_COLUMNS:
            raise ValueError(f"{csv_path}: not a trace file")
        rows = [[float(v) for v in r] for r in reader]
    meta = {}
    side = sidecar_path(csv_path)
    if side.exists():
        meta = json.loads(side.read_text())
    return Trace(np.array(rows).reshape(-1, len(header)), meta)
