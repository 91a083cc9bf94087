"""
Writers for the files the command line produces. CSV and JSON are UTF-8
with LF line endings; every float goes through `fmt` so reruns are
byte-identical. Plots are matplotlib figures saved as SVG.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import jsonschema
import matplotlib
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure

from qwalks.src.errors import ConsistencyError
from qwalks.src.utils import fmt
from qwalks.src.walks import Trajectory

logger = logging.getLogger(__name__)

TRAJECTORY_SCHEMA = {
    "type": "object",
    "required": ["m", "q", "x0", "seed", "states"],
    "properties": {
        "m": {"type": "integer", "minimum": 1},
        "q": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "x0": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "seed": {"type": ["integer", "null"]},
        "states": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        },
    },
}

KERNEL_SCHEMA = {
    "type": "object",
    "required": ["x", "q", "method", "entries"],
    "properties": {
        "x": {"type": "array", "items": {"type": "integer"}},
        "q": {"type": "number"},
        "method": {"enum": ["quadrature", "residues"]},
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["pt1", "pt2", "re", "im", "est_error"],
                "properties": {
                    "pt1": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                    "pt2": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                    "re": {"type": "number"},
                    "im": {"type": "number"},
                    "est_error": {"type": "number", "minimum": 0},
                },
            },
        },
    },
}

TILINGS_SCHEMA = {
    "type": "object",
    "required": ["lambda", "q", "partition_function", "tilings"],
    "properties": {
        "lambda": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "q": {"type": "number"},
        "partition_function": {"type": "number", "exclusiveMinimum": 0},
        "tilings": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["array", "volume", "prob"],
                "properties": {
                    "array": {"type": "array"},
                    "volume": {"type": "integer", "minimum": 0},
                    "prob": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}

SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["count", "mean", "quantiles"],
    "properties": {
        "count": {"type": "integer", "minimum": 0},
        "mean": {"type": "number"},
        "std": {"type": "number"},
        "quantiles": {"type": "object"},
    },
}


def _round_floats(document: Any) -> Any:
    """Floats replaced by their fixed significant-digit value"""
    if isinstance(document, dict):
        return {key: _round_floats(value) for key, value in document.items()}
    if isinstance(document, (list, tuple)):
        return [_round_floats(value) for value in document]
    if isinstance(document, float):
        if not math.isfinite(document):
            return None
        return float(fmt(document))
    return document


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else fmt(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Header row then one line per row"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as csv_file:
        writer = csv.writer(csv_file, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    logger.info("Wrote %s", path)
    return path


def write_json(path: Path, document: Any, schema: Optional[dict] = None) -> Path:
    """One JSON document per file, validated against `schema` first"""
    document = _round_floats(document)
    if schema is not None:
        try:
            jsonschema.validate(document, schema)
        except jsonschema.ValidationError as err:
            raise ConsistencyError(f"Refusing to write {path}: {err.message}") from err
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as json_file:
        json_file.write(json.dumps(document, indent=2, sort_keys=True))
        json_file.write("\n")
    logger.info("Wrote %s", path)
    return path


def trajectory_rows(trajectory: Trajectory) -> list[tuple[int, int, int]]:
    """(t, i, y_i(t)) with particles numbered from 1"""
    return [
        (t, i, position)
        for t, state in enumerate(trajectory.states)
        for i, position in enumerate(state, start=1)
    ]


def write_trajectory(trajectory: Trajectory, out: Path, stem: str) -> tuple[Path, Path]:
    out = Path(out)
    csv_path = write_csv(out / f"{stem}.csv", ("t", "i", "y"), trajectory_rows(trajectory))
    json_path = write_json(out / f"{stem}.json", trajectory.serialize(), TRAJECTORY_SCHEMA)
    return csv_path, json_path


class BoundaryPlot:
    """
    A static (tau, rho) plot rendered with matplotlib; every data set is one
    artist whose gid names its <g> layer in the SVG.
    """

    def __init__(
        self,
        bounds: tuple[float, float, float, float],
        size: tuple[float, float] = (6.4, 4.8),
    ):
        self.tau_min, self.tau_max, self.rho_min, self.rho_max = bounds
        self.figure = Figure(figsize=size)
        self.axes = self.figure.add_subplot()
        self.axes.set_xlim(self.tau_min, self.tau_max)
        self.axes.set_ylim(self.rho_min, self.rho_max)
        self.axes.set_xlabel("tau")
        self.axes.set_ylabel("rho")

    def inside(self, tau: float, rho: float) -> bool:
        return self.tau_min <= tau <= self.tau_max and self.rho_min <= rho <= self.rho_max

    def add_polylines(
        self, layer_id: str, branches: Sequence[Sequence[tuple[float, float]]], color: str
    ):
        segments = [list(branch) for branch in branches if len(branch) >= 2]
        self.axes.add_collection(
            LineCollection(segments, colors=color, linewidths=1.5, gid=layer_id)
        )

    def add_markers(self, layer_id: str, points: Sequence[tuple[float, float]], color: str):
        taus = [tau for tau, _ in points]
        rhos = [rho for _, rho in points]
        self.axes.scatter(taus, rhos, s=6, c=color, linewidths=0, gid=layer_id)

    def write(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        # fixed salt and no date keep reruns byte-identical
        with matplotlib.rc_context({"svg.hashsalt": "qwalks", "svg.fonttype": "none"}):
            self.figure.savefig(path, format="svg", metadata={"Date": None})
        logger.info("Wrote %s", path)
        return path


def split_branches(
    points: Sequence[tuple[float, float, float]],
    plot: BoundaryPlot,
    jump: float = 0.25,
) -> list[list[tuple[float, float]]]:
    """
    Consecutive (w, tau, rho) samples joined into branches; a branch ends
    where the curve leaves the plot window or jumps by more than `jump`
    times the window diagonal.
    """
    diagonal = math.hypot(plot.tau_max - plot.tau_min, plot.rho_max - plot.rho_min)
    branches: list[list[tuple[float, float]]] = []
    current: list[tuple[float, float]] = []
    for _, tau, rho in sorted(points):
        if not plot.inside(tau, rho):
            if current:
                branches.append(current)
            current = []
            continue
        if current and math.hypot(tau - current[-1][0], rho - current[-1][1]) > jump * diagonal:
            branches.append(current)
            current = []
        current.append((tau, rho))
    if current:
        branches.append(current)
    return branches
