"""Token codec: grid pairs to token sequences and back, plus target spans.

Wire grammar (single-space separated words, UTF-8)::

    pair    := <country> WORD <dist> NUMBER <orientation_diff> NUMBER
               <scene_start> scene <scene_start> scene
    scene   := row (<row_sep> row)*
    row     := cell (<col_sep> cell)*
    cell    := <empty> | SENTINEL | concept (<concept_sep> concept)*
    concept := WORD+              resolved against the taxonomy, longest match

Cells are emitted in row-major order starting at row 1 (the rearmost row).
Distances are formatted with one decimal place and orientation differences
as whole degrees, so re-encoding a parsed sequence is byte-stable.

Targets enumerate dropped spans: ``<extra_id_0> span0 <extra_id_1> span1 ...``
closed by one final sentinel that carries no content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import GrammarError, NoSentinels, ShapeError
from .grid import AreaMatrix, GridSpec
from .scene import DEFAULT_TAXONOMY, PairMeta, Taxonomy, normalize_angle_diff

COUNTRY = "<country>"
DIST = "<dist>"
ORIENTATION_DIFF = "<orientation_diff>"
SCENE_START = "<scene_start>"
COL_SEP = "<col_sep>"
ROW_SEP = "<row_sep>"
CONCEPT_SEP = "<concept_sep>"
EMPTY = "<empty>"

SPECIAL_TOKENS: tuple[str, ...] = (
    COUNTRY, DIST, ORIENTATION_DIFF, SCENE_START, COL_SEP, ROW_SEP, CONCEPT_SEP, EMPTY,
)

MAX_SENTINELS = 100
SENTINELS: tuple[str, ...] = tuple(f"<extra_id_{i}>" for i in range(MAX_SENTINELS))
_SENTINEL_INDEX: dict[str, int] = {tok: i for i, tok in enumerate(SENTINELS)}
_SPECIAL_SET = frozenset(SPECIAL_TOKENS)

TokenSeq = tuple[str, ...]


def sentinel_index(token: str) -> int | None:
    """Sentinel index of a token, or None if it is not a sentinel."""
    return _SENTINEL_INDEX.get(token)


def tokens_to_text(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


def text_to_tokens(text: str) -> TokenSeq:
    return tuple(text.split())


def format_dist(dist_m: float) -> str:
    return f"{dist_m:.1f}"


def format_orientation(diff_deg: float) -> str:
    return str(int(round(diff_deg)))


@dataclass(frozen=True)
class SpanTargets:
    """Ordered target spans; ``spans[k]`` holds sentinel k's labels.

    An empty tuple denotes an empty cell (rendered as the empty token).
    Sentinel indices are implied by position, so they are strictly
    increasing from 0 by construction.
    """

    spans: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not 1 <= len(self.spans) <= MAX_SENTINELS - 1:
            raise ValueError(
                f"span count must be in [1, {MAX_SENTINELS - 1}], got {len(self.spans)}"
            )

    def __len__(self) -> int:
        return len(self.spans)


@dataclass(frozen=True)
class MaskedCellRef:
    """A sentinel encountered in a cell slot while parsing."""

    sentinel: int
    scene: int  # 0 = current scene, 1 = next scene
    row: int
    col: int


@dataclass(frozen=True)
class ParsedPair:
    meta: PairMeta
    matrix_t: AreaMatrix
    matrix_t1: AreaMatrix
    masked: tuple[MaskedCellRef, ...] = ()

    def as_tuple(self) -> tuple[PairMeta, AreaMatrix, AreaMatrix]:
        return self.meta, self.matrix_t, self.matrix_t1


# --- serialization ---------------------------------------------------------

def _emit_cell(out: list[str], labels: tuple[str, ...]) -> None:
    if not labels:
        out.append(EMPTY)
        return
    for k, label in enumerate(labels):
        if k:
            out.append(CONCEPT_SEP)
        out.extend(label.split(" "))


def serialize_matrix(
    matrix: AreaMatrix,
    *,
    cell_overrides: Mapping[tuple[int, int], str] | None = None,
) -> TokenSeq:
    """Emit a matrix in row-major order, row 1 first.

    ``cell_overrides`` substitutes whole cell slots with a single token
    (sentinels or the empty token); used by task construction.
    """
    out: list[str] = []
    for i, row in enumerate(matrix.cells, start=1):
        if i > 1:
            out.append(ROW_SEP)
        for j, labels in enumerate(row, start=1):
            if j > 1:
                out.append(COL_SEP)
            if cell_overrides is not None:
                override = cell_overrides.get((i, j))
                if override is not None:
                    out.append(override)
                    continue
            _emit_cell(out, labels)
    return tuple(out)


def serialize_pair(
    matrix_t: AreaMatrix,
    matrix_t1: AreaMatrix,
    meta: PairMeta,
    *,
    overrides_t: Mapping[tuple[int, int], str] | None = None,
    overrides_t1: Mapping[tuple[int, int], str] | None = None,
) -> TokenSeq:
    """Serialize two consecutive-scene matrices plus their motion metadata."""
    if matrix_t.grid != matrix_t1.grid:
        raise ValueError("matrices of a pair must share one grid")
    head = (
        COUNTRY, meta.country,
        DIST, format_dist(meta.dist_m),
        ORIENTATION_DIFF, format_orientation(meta.orientation_diff_deg),
        SCENE_START,
    )
    return (
        head
        + serialize_matrix(matrix_t, cell_overrides=overrides_t)
        + (SCENE_START,)
        + serialize_matrix(matrix_t1, cell_overrides=overrides_t1)
    )


# --- parsing ---------------------------------------------------------------

def _words_to_labels(
    words: Sequence[str], taxonomy: Taxonomy
) -> tuple[list[str], list[str]]:
    return taxonomy.match_words(words)


def _parse_cell(
    run: list[str],
    start: int,
    scene_index: int,
    row: int,
    col: int,
    taxonomy: Taxonomy,
    masked: list[MaskedCellRef],
) -> tuple[str, ...]:
    if not run:
        raise GrammarError(start, f"empty cell slot at scene {scene_index + 1} row {row} col {col}")
    if len(run) == 1:
        tok = run[0]
        if tok == EMPTY:
            return ()
        sent = _SENTINEL_INDEX.get(tok)
        if sent is not None:
            masked.append(MaskedCellRef(sentinel=sent, scene=scene_index, row=row, col=col))
            return ()
    labels: set[str] = set()
    group: list[str] = []
    for k, tok in enumerate(run + [CONCEPT_SEP]):
        if tok == CONCEPT_SEP:
            if not group:
                raise GrammarError(start + k, "empty concept")
            found, unknown = _words_to_labels(group, taxonomy)
            if unknown:
                raise GrammarError(start + k - 1, f"unknown words in cell: {' '.join(unknown)!r}")
            labels.update(found)
            group = []
        elif tok in _SPECIAL_SET or tok in _SENTINEL_INDEX:
            raise GrammarError(start + k, f"unexpected {tok!r} inside a cell")
        else:
            group.append(tok)
    return taxonomy.canonical_order(labels)


def _parse_scene(
    tokens: Sequence[str],
    pos: int,
    grid: GridSpec,
    taxonomy: Taxonomy,
    scene_index: int,
    masked: list[MaskedCellRef],
) -> tuple[AreaMatrix, int]:
    n_tokens = len(tokens)
    rows: list[tuple[tuple[str, ...], ...]] = []
    row: list[tuple[str, ...]] = []
    while True:
        start = pos
        run: list[str] = []
        while pos < n_tokens and tokens[pos] not in (COL_SEP, ROW_SEP, SCENE_START):
            run.append(tokens[pos])
            pos += 1
        row.append(
            _parse_cell(run, start, scene_index, len(rows) + 1, len(row) + 1, taxonomy, masked)
        )
        if pos >= n_tokens or tokens[pos] == SCENE_START:
            rows.append(tuple(row))
            break
        if tokens[pos] == ROW_SEP:
            rows.append(tuple(row))
            row = []
        pos += 1

    if len(rows) != grid.rows:
        raise ShapeError(
            f"scene {scene_index + 1}: expected {grid.rows} rows, got {len(rows)}"
        )
    for i, parsed_row in enumerate(rows, start=1):
        if len(parsed_row) != grid.cols:
            raise ShapeError(
                f"scene {scene_index + 1} row {i}: expected {grid.cols} cells, "
                f"got {len(parsed_row)}"
            )
    return AreaMatrix(grid=grid, cells=tuple(rows)), pos


def parse_sequence(
    tokens: Sequence[str] | str,
    grid: GridSpec,
    taxonomy: Taxonomy = DEFAULT_TAXONOMY,
) -> ParsedPair:
    """Parse a serialized pair back into (meta, matrix, matrix).

    Exact inverse of :func:`serialize_pair` on its image. Sentinels are
    accepted in cell slots and reported in ``masked``; their cells parse as
    empty. Raises GrammarError with a token position, or ShapeError when the
    cell layout does not match ``grid``.
    """
    if isinstance(tokens, str):
        tokens = text_to_tokens(tokens)
    pos = 0
    n_tokens = len(tokens)

    def expect(token: str) -> None:
        nonlocal pos
        if pos >= n_tokens:
            raise GrammarError(pos, f"expected {token!r}, found end of input")
        if tokens[pos] != token:
            raise GrammarError(pos, f"expected {token!r}, found {tokens[pos]!r}")
        pos += 1

    def take_word(what: str) -> str:
        nonlocal pos
        if pos >= n_tokens:
            raise GrammarError(pos, f"expected {what}, found end of input")
        tok = tokens[pos]
        if tok in _SPECIAL_SET or tok in _SENTINEL_INDEX:
            raise GrammarError(pos, f"expected {what}, found {tok!r}")
        pos += 1
        return tok

    def take_number(what: str) -> float:
        at = pos
        tok = take_word(what)
        try:
            value = float(tok)
        except ValueError:
            raise GrammarError(at, f"expected {what} number, found {tok!r}") from None
        if not math.isfinite(value):
            raise GrammarError(at, f"{what} must be finite, found {tok!r}")
        return value

    expect(COUNTRY)
    country = take_word("country code")
    expect(DIST)
    dist_at = pos
    dist = take_number("distance")
    if dist < 0:
        raise GrammarError(dist_at, f"distance must be non-negative, found {dist}")
    expect(ORIENTATION_DIFF)
    diff = normalize_angle_diff(take_number("orientation difference"))
    expect(SCENE_START)

    masked: list[MaskedCellRef] = []
    matrix_t, pos = _parse_scene(tokens, pos, grid, taxonomy, 0, masked)
    expect(SCENE_START)
    matrix_t1, pos = _parse_scene(tokens, pos, grid, taxonomy, 1, masked)
    if pos != n_tokens:
        raise GrammarError(pos, f"unexpected trailing token {tokens[pos]!r}")

    meta = PairMeta(country=country, dist_m=dist, orientation_diff_deg=diff)
    return ParsedPair(
        meta=meta, matrix_t=matrix_t, matrix_t1=matrix_t1, masked=tuple(masked)
    )


# --- target spans ----------------------------------------------------------

def render_targets(targets: SpanTargets) -> TokenSeq:
    """Render spans as ``<extra_id_0> span0 ... <extra_id_k>`` with a final
    content-free sentinel."""
    out: list[str] = []
    for idx, labels in enumerate(targets.spans):
        out.append(SENTINELS[idx])
        _emit_cell(out, labels)
    out.append(SENTINELS[len(targets.spans)])
    return tuple(out)


@dataclass(frozen=True)
class ParsedTargets:
    """Lenient target parse result with noise diagnostics."""

    targets: SpanTargets
    truncated: bool
    noisy_spans: tuple[int, ...]


def parse_targets(
    tokens: Sequence[str] | str,
    expected_count: int,
    taxonomy: Taxonomy = DEFAULT_TAXONOMY,
    *,
    strict: bool = False,
) -> ParsedTargets:
    """Parse a target stream into ``expected_count`` spans.

    Lenient mode tolerates model noise: content after the final sentinel is
    ignored, missing trailing sentinels leave the remaining spans empty
    (``truncated`` set), and unknown words are dropped and flagged in
    ``noisy_spans``. Strict mode raises GrammarError on any of those.
    """
    if isinstance(tokens, str):
        tokens = text_to_tokens(tokens)
    if not 1 <= expected_count <= MAX_SENTINELS - 1:
        raise ValueError(f"expected_count must be in [1, {MAX_SENTINELS - 1}]")
    if not tokens or tokens[0] != SENTINELS[0]:
        found = tokens[0] if tokens else "end of input"
        raise NoSentinels(f"target must start with {SENTINELS[0]!r}, found {found!r}")

    raw: list[list[tuple[str, int]]] = [[] for _ in range(expected_count)]
    current = 0
    final_seen = False
    next_expected = 1  # for strict ordering checks
    for pos in range(1, len(tokens)):
        tok = tokens[pos]
        sent = _SENTINEL_INDEX.get(tok)
        if sent is None:
            raw[current].append((tok, pos))
            continue
        if sent == expected_count:
            final_seen = True
            if strict and pos != len(tokens) - 1:
                raise GrammarError(pos + 1, "content after final sentinel")
            break
        if sent < expected_count:
            if strict and sent != next_expected:
                raise GrammarError(pos, f"expected sentinel {next_expected}, found {sent}")
            current = sent
            next_expected = sent + 1
            continue
        # sentinel beyond the final one: treat as stream corruption
        if strict:
            raise GrammarError(pos, f"sentinel index {sent} exceeds span count")
        break

    if strict and not final_seen:
        raise GrammarError(len(tokens), "missing final sentinel")

    spans: list[tuple[str, ...]] = []
    noisy: list[int] = []
    for idx, items in enumerate(raw):
        labels: list[str] = []
        group: list[str] = []
        noise = False

        def flush(at: int, trailing: bool = False) -> None:
            nonlocal noise
            if not group:
                if strict and not trailing:
                    raise GrammarError(at, "empty concept in span")
                return
            found, unknown = taxonomy.match_words(group)
            if unknown:
                if strict:
                    raise GrammarError(at, f"unknown words in span: {' '.join(unknown)!r}")
                noise = True
            for label in found:
                if label not in labels:
                    labels.append(label)
            group.clear()

        for tok, pos in items:
            if tok == CONCEPT_SEP:
                flush(pos)
            elif tok == EMPTY:
                if strict and (group or labels or len(items) > 1):
                    raise GrammarError(pos, "empty token mixed with span content")
            elif tok in _SPECIAL_SET:
                if strict:
                    raise GrammarError(pos, f"unexpected {tok!r} in span")
                noise = True
            else:
                group.append(tok)
        flush(items[-1][1] if items else 0, trailing=True)
        if noise:
            noisy.append(idx)
        spans.append(tuple(labels))

    return ParsedTargets(
        targets=SpanTargets(spans=tuple(spans)),
        truncated=not final_seen,
        noisy_spans=tuple(noisy),
    )
