"""Task construction: span corruption over serialized scene pairs.

Two tasks are built from a pair of consecutive scenes:

* cell prediction ("scene-object"): a few random central cells of each scene
  are replaced by sentinel tokens and their contents become the target;
* next-scene prediction ("next-scene"): the current scene stays fully
  observed, every central cell of the next scene becomes a sentinel, and the
  next scene's margin cells are forced to the empty token.

Masking is confined to a centered block of at most 99 cells so a sample can
never exhaust the 100-sentinel vocabulary (one sentinel is reserved to close
the target).
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Iterator, Sequence

from .codec import EMPTY, SENTINELS, SpanTargets, TokenSeq, render_targets, serialize_pair
from .errors import GridTooSmall, RegionTooSmall
from .grid import AreaMatrix, GridSpec, rasterize
from .scene import PairMeta, Scene, Taxonomy, iter_scene_pairs, pair_metadata

SCENE_OBJECT = "scene-object"
NEXT_SCENE = "next-scene"
TASKS = (SCENE_OBJECT, NEXT_SCENE)

#: Cells masked per scene in the scene-object task.
DEFAULT_CELLS_PER_SCENE = 3

#: Largest maskable block; leaves one sentinel free for the target closer.
MAX_REGION_CELLS = 99


@dataclass(frozen=True)
class CentralRegion:
    """Centered block of maskable cells, 1-based inclusive bounds."""

    row_lo: int
    row_hi: int
    col_lo: int
    col_hi: int

    @property
    def rows(self) -> int:
        return self.row_hi - self.row_lo + 1

    @property
    def cols(self) -> int:
        return self.col_hi - self.col_lo + 1

    @property
    def area(self) -> int:
        return self.rows * self.cols

    def __contains__(self, rc: tuple[int, int]) -> bool:
        r, c = rc
        return self.row_lo <= r <= self.row_hi and self.col_lo <= c <= self.col_hi

    def cells(self) -> list[tuple[int, int]]:
        """All member cells in row-major order."""
        return [
            (r, c)
            for r in range(self.row_lo, self.row_hi + 1)
            for c in range(self.col_lo, self.col_hi + 1)
        ]


def central_region(grid: GridSpec) -> CentralRegion:
    """Largest centered block with equal margins whose area stays <= 99.

    Margins are symmetric per axis, so the block dimensions keep the parity
    of the grid. Ties in area prefer longitudinal (row) coverage. For the
    default 20x11 grid this yields the 14x7 block rows 4..17, cols 3..9.
    """
    if grid.rows < 1 or grid.cols < 1:
        raise GridTooSmall(f"grid {grid.rows}x{grid.cols} has no cells to mask")
    best: tuple[int, int, int] | None = None  # (area, rows, cols)
    for a in range((grid.rows + 1) // 2):
        rows = grid.rows - 2 * a
        if rows < 1:
            break
        for b in range((grid.cols + 1) // 2):
            cols = grid.cols - 2 * b
            if cols < 1:
                break
            area = rows * cols
            if area > MAX_REGION_CELLS:
                continue
            key = (area, rows, cols)
            if best is None or key > best:
                best = key
    if best is None:
        raise GridTooSmall(
            f"grid {grid.rows}x{grid.cols} admits no centered block of <= "
            f"{MAX_REGION_CELLS} cells"
        )
    _, rows, cols = best
    a = (grid.rows - rows) // 2
    b = (grid.cols - cols) // 2
    return CentralRegion(row_lo=a + 1, row_hi=a + rows, col_lo=b + 1, col_hi=b + cols)


@dataclass(frozen=True)
class ScenePair:
    """Two consecutive rasterized scenes plus their motion metadata."""

    scene_t_id: str
    scene_t1_id: str
    meta: PairMeta
    matrix_t: AreaMatrix
    matrix_t1: AreaMatrix

    @property
    def pair_id(self) -> str:
        return f"{self.scene_t_id}->{self.scene_t1_id}"

    @property
    def grid(self) -> GridSpec:
        return self.matrix_t.grid


def build_pair(
    scene_t: Scene, scene_t1: Scene, grid: GridSpec, taxonomy: Taxonomy
) -> ScenePair:
    return ScenePair(
        scene_t_id=scene_t.scene_id,
        scene_t1_id=scene_t1.scene_id,
        meta=pair_metadata(scene_t, scene_t1),
        matrix_t=rasterize(scene_t, grid, taxonomy),
        matrix_t1=rasterize(scene_t1, grid, taxonomy),
    )


def build_pairs(
    ordered_scenes: Sequence[Scene], grid: GridSpec, taxonomy: Taxonomy
) -> list[ScenePair]:
    """Consecutive pairs of an ordered sequence, rasterized once per scene."""
    matrices = [rasterize(s, grid, taxonomy) for s in ordered_scenes]
    pairs = []
    for k, (a, b) in enumerate(iter_scene_pairs(ordered_scenes)):
        pairs.append(
            ScenePair(
                scene_t_id=a.scene_id,
                scene_t1_id=b.scene_id,
                meta=pair_metadata(a, b),
                matrix_t=matrices[k],
                matrix_t1=matrices[k + 1],
            )
        )
    return pairs


@dataclass(frozen=True)
class MaskPlan:
    """Which cells are masked, in sentinel order (scene T first, row-major)."""

    task: str
    masked_cells_t: tuple[tuple[int, int], ...]
    masked_cells_t1: tuple[tuple[int, int], ...]

    @property
    def sentinel_count(self) -> int:
        return len(self.masked_cells_t) + len(self.masked_cells_t1)

    def sentinel_cells(self) -> Iterator[tuple[int, int, int, int]]:
        """Yield (sentinel, scene, row, col) in order of appearance."""
        k = 0
        for r, c in self.masked_cells_t:
            yield k, 0, r, c
            k += 1
        for r, c in self.masked_cells_t1:
            yield k, 1, r, c
            k += 1


@dataclass(frozen=True)
class MaskedSample:
    """One task instance: corrupted input, gold target, and its plan."""

    sample_id: str
    scene_t_id: str
    scene_t1_id: str
    task: str
    input_tokens: TokenSeq
    target_tokens: TokenSeq
    plan: MaskPlan


def _sample_cells(
    region: CentralRegion, count: int, rng: random.Random
) -> tuple[tuple[int, int], ...]:
    cells = region.cells()
    if count > len(cells):
        raise RegionTooSmall(
            f"cannot mask {count} cells in a {region.rows}x{region.cols} region"
        )
    return tuple(sorted(rng.sample(cells, count)))


def _gold_spans(pair: ScenePair, plan: MaskPlan) -> SpanTargets:
    spans = []
    for _, scene, r, c in plan.sentinel_cells():
        matrix = pair.matrix_t if scene == 0 else pair.matrix_t1
        spans.append(matrix.cell(r, c))
    return SpanTargets(spans=tuple(spans))


def _assemble(pair: ScenePair, plan: MaskPlan, *, blank_margin_t1: bool = False) -> MaskedSample:
    overrides_t = {}
    overrides_t1 = {}
    for k, scene, r, c in plan.sentinel_cells():
        (overrides_t if scene == 0 else overrides_t1)[(r, c)] = SENTINELS[k]
    if blank_margin_t1:
        region = central_region(pair.grid)
        for i in range(1, pair.grid.rows + 1):
            for j in range(1, pair.grid.cols + 1):
                if (i, j) not in region and (i, j) not in overrides_t1:
                    overrides_t1[(i, j)] = EMPTY
    input_tokens = serialize_pair(
        pair.matrix_t, pair.matrix_t1, pair.meta,
        overrides_t=overrides_t or None,
        overrides_t1=overrides_t1 or None,
    )
    target_tokens = render_targets(_gold_spans(pair, plan))
    return MaskedSample(
        sample_id=f"{plan.task}:{pair.pair_id}",
        scene_t_id=pair.scene_t_id,
        scene_t1_id=pair.scene_t1_id,
        task=plan.task,
        input_tokens=input_tokens,
        target_tokens=target_tokens,
        plan=plan,
    )


def build_scene_object_sample(
    pair: ScenePair,
    seed: int,
    *,
    cells_per_scene: int = DEFAULT_CELLS_PER_SCENE,
) -> MaskedSample:
    """Mask ``cells_per_scene`` random central cells in each scene.

    Sampling is uniform without replacement and fully determined by ``seed``.
    """
    region = central_region(pair.grid)
    rng = random.Random(seed)
    plan = MaskPlan(
        task=SCENE_OBJECT,
        masked_cells_t=_sample_cells(region, cells_per_scene, rng),
        masked_cells_t1=_sample_cells(region, cells_per_scene, rng),
    )
    return _assemble(pair, plan)


def build_next_scene_sample(pair: ScenePair) -> MaskedSample:
    """Mask the whole central region of the next scene.

    The current scene stays fully observed; the next scene's margin cells
    are emitted as the empty token regardless of content and are absent from
    the target.
    """
    region = central_region(pair.grid)
    plan = MaskPlan(
        task=NEXT_SCENE,
        masked_cells_t=(),
        masked_cells_t1=tuple(region.cells()),
    )
    return _assemble(pair, plan, blank_margin_t1=True)


def pair_seed(base_seed: int, epoch: int, pair_id: str) -> int:
    """Stable 64-bit seed for one pair in one epoch."""
    digest = hashlib.sha256(f"{base_seed}:{epoch}:{pair_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def remask_epoch(
    pairs: Sequence[ScenePair],
    epoch: int,
    base_seed: int,
    *,
    cells_per_scene: int = DEFAULT_CELLS_PER_SCENE,
) -> Iterator[MaskedSample]:
    """Fresh mask placements for every pair, reproducible per (seed, epoch).

    Per-pair seeds come from a stable hash, so the stream is identical no
    matter how iteration is scheduled.
    """
    for pair in pairs:
        yield build_scene_object_sample(
            pair,
            pair_seed(base_seed, epoch, pair.pair_id),
            cells_per_scene=cells_per_scene,
        )
