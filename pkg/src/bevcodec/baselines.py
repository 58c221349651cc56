"""Non-neural reference predictors over the task pipeline.

Two references are provided:

* a positional majority model that predicts, per grid cell, the label set
  most often observed at that cell in a training split;
* a persistence predictor that carries every occupant of the current scene
  through the inverse ego motion and re-bins it into the next scene's grid,
  assuming the world holds still.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .codec import SpanTargets
from .errors import UnfittedModel
from .grid import AreaMatrix, GridSpec, assign_cell, to_ego_frame
from .masking import MaskedSample, ScenePair
from .scene import DEFAULT_TAXONOMY, EGO_LABEL, EgoPose, PairMeta, Taxonomy

Cell = tuple[str, ...]

_MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class CellFrequencyModel:
    """Per-cell multiset of observed label sets."""

    grid: GridSpec
    counts: Mapping[tuple[int, int], Mapping[Cell, int]]

    def most_frequent(self, row: int, col: int) -> Cell:
        """Modal label set at a cell; ties prefer smaller, then earlier sets."""
        cell_counts = self.counts.get((row, col))
        if not cell_counts:
            raise UnfittedModel(f"no observations for cell ({row}, {col})")
        return min(
            cell_counts.items(), key=lambda kv: (-kv[1], len(kv[0]), kv[0])
        )[0]


def majority_fit(train_pairs: Sequence[ScenePair]) -> CellFrequencyModel:
    """Count every cell's content over both matrices of every training pair."""
    if not train_pairs:
        raise UnfittedModel("empty training split")
    grid = train_pairs[0].grid
    counts: dict[tuple[int, int], dict[Cell, int]] = {}
    for pair in train_pairs:
        if pair.grid != grid:
            raise ValueError("training pairs use different grids")
        for matrix in (pair.matrix_t, pair.matrix_t1):
            for i, j, labels in matrix.iter_cells():
                cell_counts = counts.setdefault((i, j), {})
                cell_counts[labels] = cell_counts.get(labels, 0) + 1
    return CellFrequencyModel(grid=grid, counts=counts)


def majority_predict(model: CellFrequencyModel, sample: MaskedSample) -> SpanTargets:
    """Predict each masked cell's modal label set, in sentinel order."""
    spans = tuple(
        model.most_frequent(r, c) for _, _, r, c in sample.plan.sentinel_cells()
    )
    return SpanTargets(spans=spans)


def save_model(model: CellFrequencyModel, path: str | Path) -> None:
    payload = {
        "format_version": _MODEL_FORMAT_VERSION,
        "grid": model.grid.to_dict(),
        "cells": {
            f"{i},{j}": [[list(labels), count] for labels, count in sorted(cell.items())]
            for (i, j), cell in sorted(model.counts.items())
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def load_model(path: str | Path) -> CellFrequencyModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    version = payload.get("format_version")
    if version != _MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version: {version!r}")
    counts: dict[tuple[int, int], dict[Cell, int]] = {}
    for key, entries in payload["cells"].items():
        i, j = (int(part) for part in key.split(","))
        counts[(i, j)] = {tuple(labels): int(count) for labels, count in entries}
    return CellFrequencyModel(grid=GridSpec.from_dict(payload["grid"]), counts=counts)


def persistence_predict(
    matrix_t: AreaMatrix,
    meta: PairMeta,
    grid: GridSpec,
    taxonomy: Taxonomy = DEFAULT_TAXONOMY,
) -> AreaMatrix:
    """Predict the next scene by carrying cell contents through the ego motion.

    Every occupant is represented by its cell center, rotated by the negated
    heading change and shifted rearward by the traveled distance, then
    re-binned. Occupants are assumed stationary in the world; the ego label
    is re-inserted at the origin cell rather than transformed.
    """
    diff_rad = math.radians(meta.orientation_diff_deg)
    next_ego = EgoPose(
        x=meta.dist_m * math.cos(diff_rad),
        y=meta.dist_m * math.sin(diff_rad),
        heading_deg=meta.orientation_diff_deg,
    )
    buckets: dict[tuple[int, int], set[str]] = {}
    for i, j, labels in matrix_t.iter_cells():
        carried = [label for label in labels if label != EGO_LABEL]
        if not carried:
            continue
        lat, lon = matrix_t.grid.cell_center(i, j)
        # cell center as a map point for an origin-anchored, east-facing ego
        rc = assign_cell(to_ego_frame((lon, -lat), next_ego), grid)
        if rc is not None:
            buckets.setdefault(rc, set()).update(carried)
    ego_rc = assign_cell((0.0, 0.0), grid)
    if ego_rc is not None:
        buckets.setdefault(ego_rc, set()).add(EGO_LABEL)

    rows = []
    for i in range(1, grid.rows + 1):
        row = []
        for j in range(1, grid.cols + 1):
            labels = buckets.get((i, j))
            row.append(taxonomy.canonical_order(labels) if labels else ())
        rows.append(tuple(row))
    return AreaMatrix(grid=grid, cells=tuple(rows))
