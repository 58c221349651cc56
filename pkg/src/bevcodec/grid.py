"""Ego-centric BEV grid: coordinate transform, cell assignment, rasterization.

The grid is anchored at the ego vehicle and adopts its orientation. Ego-frame
coordinates are (lat, lon): lon is the signed forward distance, lat the
signed lateral offset, negative toward the ego's left and positive toward its
right. Row 1 is the rearmost row (lon near -rear_m) and column 1 the leftmost
column (lat near -left_m), so printing rows n..1 top to bottom draws the
scene as seen from above with the ego heading up.

Cells tile the extent half-open: a cell owns its lower edges, and the grid's
outermost top row / rightmost column additionally own the outer boundary, so
every in-range point belongs to exactly one cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

from .errors import UnknownLabel
from .scene import EGO_LABEL, EgoPose, Scene, Taxonomy

_GEOM_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Grid geometry: n x m cells of cell_h x cell_w meters around the ego."""

    rows: int
    cols: int
    cell_h: float
    cell_w: float
    front_m: float
    rear_m: float
    left_m: float
    right_m: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and one column")
        for name in ("cell_h", "cell_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if abs(self.rows * self.cell_h - (self.front_m + self.rear_m)) > _GEOM_TOL:
            raise ValueError(
                f"rows*cell_h = {self.rows * self.cell_h} does not cover "
                f"front_m+rear_m = {self.front_m + self.rear_m}"
            )
        if abs(self.cols * self.cell_w - (self.left_m + self.right_m)) > _GEOM_TOL:
            raise ValueError(
                f"cols*cell_w = {self.cols * self.cell_w} does not cover "
                f"left_m+right_m = {self.left_m + self.right_m}"
            )

    @property
    def cell_count(self) -> int:
        return self.rows * self.cols

    def row_bounds(self, i: int) -> tuple[float, float]:
        """Longitudinal [low, high) extent of 1-based row i."""
        lo = -self.rear_m + (i - 1) * self.cell_h
        return lo, lo + self.cell_h

    def col_bounds(self, j: int) -> tuple[float, float]:
        """Lateral [low, high) extent of 1-based column j."""
        lo = -self.left_m + (j - 1) * self.cell_w
        return lo, lo + self.cell_w

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        """Ego-frame (lat, lon) center of 1-based cell (i, j)."""
        lon = -self.rear_m + (i - 0.5) * self.cell_h
        lat = -self.left_m + (j - 0.5) * self.cell_w
        return lat, lon

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "cell_h": self.cell_h,
            "cell_w": self.cell_w,
            "front_m": self.front_m,
            "rear_m": self.rear_m,
            "left_m": self.left_m,
            "right_m": self.right_m,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        keys = {"rows", "cols", "cell_h", "cell_w", "front_m", "rear_m", "left_m", "right_m"}
        missing = keys - set(data)
        if missing:
            raise ValueError(f"grid config missing keys: {sorted(missing)}")
        extra = set(data) - keys
        if extra:
            raise ValueError(f"grid config has unknown keys: {sorted(extra)}")
        return cls(
            rows=int(data["rows"]),
            cols=int(data["cols"]),
            cell_h=float(data["cell_h"]),
            cell_w=float(data["cell_w"]),
            front_m=float(data["front_m"]),
            rear_m=float(data["rear_m"]),
            left_m=float(data["left_m"]),
            right_m=float(data["right_m"]),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "GridSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


GRID_PRESETS: dict[str, GridSpec] = {
    "default-20x11": GridSpec(
        rows=20, cols=11, cell_h=2.0, cell_w=2.0,
        front_m=30.0, rear_m=10.0, left_m=11.0, right_m=11.0,
    ),
    "ablation-8x5": GridSpec(
        rows=8, cols=5, cell_h=5.0, cell_w=5.0,
        front_m=30.0, rear_m=10.0, left_m=12.5, right_m=12.5,
    ),
}


def grid_by_name(name_or_path: str) -> GridSpec:
    """Resolve a preset name or a JSON config file path to a GridSpec."""
    if name_or_path in GRID_PRESETS:
        return GRID_PRESETS[name_or_path]
    path = Path(name_or_path)
    if path.exists():
        return GridSpec.from_file(path)
    raise ValueError(
        f"unknown grid {name_or_path!r}; presets: {sorted(GRID_PRESETS)} or a JSON file path"
    )


Cell = tuple[str, ...]


@dataclass(frozen=True)
class AreaMatrix:
    """n x m grid of cells; each cell is a canonically ordered label tuple.

    ``cells[i-1][j-1]`` is cell (i, j), with row 1 the rearmost row and
    column 1 the leftmost column. Within a cell labels are distinct and
    ordered static-first, then lexicographic.
    """

    grid: GridSpec
    cells: tuple[tuple[Cell, ...], ...]

    def __post_init__(self):
        if len(self.cells) != self.grid.rows or any(
            len(row) != self.grid.cols for row in self.cells
        ):
            raise ValueError("cells do not match grid dimensions")

    def cell(self, i: int, j: int) -> Cell:
        """1-based accessor for cell (i, j)."""
        return self.cells[i - 1][j - 1]

    def iter_cells(self) -> Iterator[tuple[int, int, Cell]]:
        """Yield (row, col, labels) in row-major order, row 1 first."""
        for i, row in enumerate(self.cells, start=1):
            for j, labels in enumerate(row, start=1):
                yield i, j, labels

    @classmethod
    def empty(cls, grid: GridSpec) -> "AreaMatrix":
        row = tuple(() for _ in range(grid.cols))
        return cls(grid=grid, cells=tuple(row for _ in range(grid.rows)))

    @classmethod
    def from_lists(
        cls, grid: GridSpec, rows: Sequence[Sequence[Sequence[str]]], taxonomy: Taxonomy
    ) -> "AreaMatrix":
        cells = tuple(
            tuple(taxonomy.canonical_order(labels) for labels in row) for row in rows
        )
        return cls(grid=grid, cells=cells)


def to_ego_frame(point: tuple[float, float], ego: EgoPose) -> tuple[float, float]:
    """Map-frame (x, y) to ego-frame (lat, lon).

    Translates by -ego position and rotates by -heading; lon is the forward
    component, lat the lateral one (negative left, positive right).
    """
    theta = math.radians(ego.heading_deg)
    dx = point[0] - ego.x
    dy = point[1] - ego.y
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    lon = dx * cos_t + dy * sin_t
    lat = dx * sin_t - dy * cos_t
    return lat, lon


def _locate(value: float, low: float, size: float, count: int, upper: float) -> int:
    """1-based index of the half-open bin [low+(k-1)*size, low+k*size)
    holding ``value``; the last bin is closed at ``upper``.

    The floored quotient is only an index guess: it is verified against the
    bin edges (computed exactly as low + k*size) and corrected by one, so a
    value one ulp below an edge stays in the lower bin. ``value`` must
    already lie inside [low, upper].
    """
    if value == upper:
        return count
    k = int((value - low) // size) + 1
    if k < 1:
        k = 1
    elif k > count:
        k = count
    lo = low + (k - 1) * size
    if value < lo:
        k -= 1
    elif value >= lo + size and k < count:
        k += 1
    return k


def assign_cell(p: tuple[float, float], grid: GridSpec) -> tuple[int, int] | None:
    """1-based (row, col) owning ego-frame point p, or None if out of range.

    Cells are half-open on their upper edges; the topmost row and rightmost
    column are additionally closed on the grid's outer boundary, so every
    in-range point has exactly one owner.
    """
    lat, lon = p
    if lon < -grid.rear_m or lon > grid.front_m:
        return None
    if lat < -grid.left_m or lat > grid.right_m:
        return None
    i = _locate(lon, -grid.rear_m, grid.cell_h, grid.rows, grid.front_m)
    j = _locate(lat, -grid.left_m, grid.cell_w, grid.cols, grid.right_m)
    return i, j


def rasterize(scene: Scene, grid: GridSpec, taxonomy: Taxonomy) -> AreaMatrix:
    """Bin a scene's objects into the ego-anchored grid.

    Out-of-range objects are dropped. The ego vehicle itself is inserted as
    EGO_LABEL at the cell containing the origin. Cells hold label sets, so
    several objects of one type in a cell collapse to a single entry.
    """
    if EGO_LABEL not in taxonomy:
        raise UnknownLabel(f"taxonomy must contain {EGO_LABEL!r}")
    buckets: dict[tuple[int, int], set[str]] = {}
    ego = scene.ego
    for obj in scene.objects:
        rc = assign_cell(to_ego_frame((obj.x, obj.y), ego), grid)
        if rc is not None:
            buckets.setdefault(rc, set()).add(obj.label)
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
