"""Shared test fixtures: randomized matrices, metadata, and splice tools."""

from __future__ import annotations

import random

from bevcodec import (
    AreaMatrix,
    DEFAULT_TAXONOMY,
    GRID_PRESETS,
    GridSpec,
    PairMeta,
    SENTINELS,
    Taxonomy,
)
from bevcodec.codec import sentinel_index

DEFAULT_GRID = GRID_PRESETS["default-20x11"]
ABLATION_GRID = GRID_PRESETS["ablation-8x5"]


def random_cell(rng: random.Random, taxonomy: Taxonomy, max_labels: int = 3) -> tuple[str, ...]:
    count = rng.randint(1, max_labels)
    return taxonomy.canonical_order(rng.sample(taxonomy.labels, count))


def random_matrix(
    rng: random.Random,
    grid: GridSpec,
    taxonomy: Taxonomy = DEFAULT_TAXONOMY,
    fill_prob: float = 0.2,
) -> AreaMatrix:
    rows = []
    for _ in range(grid.rows):
        row = []
        for _ in range(grid.cols):
            row.append(random_cell(rng, taxonomy) if rng.random() < fill_prob else ())
        rows.append(tuple(row))
    return AreaMatrix(grid=grid, cells=tuple(rows))


def random_meta(rng: random.Random) -> PairMeta:
    """Metadata representable exactly by the wire format (0.1 m / 1 degree)."""
    return PairMeta(
        country=rng.choice(("US", "SG")),
        dist_m=rng.randint(0, 300) / 10.0,
        orientation_diff_deg=float(rng.randint(-179, 180)),
    )


def splice_targets(input_tokens, target_tokens) -> tuple[str, ...]:
    """Replace each input sentinel with its span from the target stream."""
    spans: dict[int, list[str]] = {}
    current: list[str] | None = None
    for tok in target_tokens:
        idx = sentinel_index(tok)
        if idx is not None:
            current = spans.setdefault(idx, [])
        else:
            assert current is not None, "target content before first sentinel"
            current.append(tok)
    out: list[str] = []
    for tok in input_tokens:
        idx = sentinel_index(tok)
        if idx is not None:
            out.extend(spans[idx])
        else:
            out.append(tok)
    return tuple(out)
