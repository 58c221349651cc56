"""Scene domain model: objects, poses, scenes, taxonomy, and pair metadata.

A corpus is stored as UTF-8 JSON Lines, one scene per line::

    {"scene_id": "s-1", "sequence_id": "q-1", "timestamp_us": 0,
     "country": "US", "ego": {"x": 0.0, "y": 0.0, "heading_deg": 90.0},
     "objects": [{"id": "o-1", "label": "car", "x": 1.0, "y": 2.0}],
     "prev": null, "next": "s-2"}

Field order is not significant. Unknown fields are rejected in strict mode
and ignored with a warning otherwise.

Coordinates are map-frame meters (x east, y north). Headings are degrees,
counter-clockwise from the east axis, normalized to [0, 360).
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    BrokenChain,
    DuplicateTimestamp,
    MalformedRecord,
    NonFiniteCoordinate,
    NotConsecutive,
    UnknownLabel,
)

log = logging.getLogger(__name__)

STATIC = "static"
DYNAMIC = "dynamic"

#: Label injected by the rasterizer at the grid origin cell.
EGO_LABEL = "ego car"

# Default label set: the 28 annotation/map labels of the benchmark corpus
# plus "lane". Map-layer labels are static; object annotations are dynamic.
_DEFAULT_LABELS: tuple[tuple[str, str], ...] = (
    ("lane", STATIC),
    ("walkway", STATIC),
    ("intersection", STATIC),
    ("pedestrian crossing", STATIC),
    ("turn stop area", STATIC),
    ("car park area", STATIC),
    ("traffic light stop area", STATIC),
    ("pedestrian crossing stop area", STATIC),
    ("stop sign area", STATIC),
    ("ego car", DYNAMIC),
    ("car", DYNAMIC),
    ("barrier", DYNAMIC),
    ("traffic cone", DYNAMIC),
    ("adult", DYNAMIC),
    ("pushable pullable", DYNAMIC),
    ("truck", DYNAMIC),
    ("construction worker", DYNAMIC),
    ("bicycle", DYNAMIC),
    ("motorcycle", DYNAMIC),
    ("bus rigid", DYNAMIC),
    ("trailer", DYNAMIC),
    ("emergency police", DYNAMIC),
    ("construction vehicle", DYNAMIC),
    ("bicycle rack", DYNAMIC),
    ("child", DYNAMIC),
    ("debris", DYNAMIC),
    ("police officer", DYNAMIC),
    ("animal", DYNAMIC),
    ("stroller", DYNAMIC),
)


@dataclass(frozen=True)
class Taxonomy:
    """Ordered label set with a static/dynamic kind per label."""

    entries: tuple[tuple[str, str], ...]
    _kind: Mapping[str, str] = field(init=False, repr=False, compare=False)
    _max_words: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kinds = {}
        for label, kind in self.entries:
            if label in kinds:
                raise ValueError(f"duplicate taxonomy label: {label!r}")
            if kind not in (STATIC, DYNAMIC):
                raise ValueError(f"bad kind for {label!r}: {kind!r}")
            kinds[label] = kind
        object.__setattr__(self, "_kind", kinds)
        max_words = max((label.count(" ") + 1 for label, _ in self.entries), default=1)
        object.__setattr__(self, "_max_words", max_words)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.entries)

    def __contains__(self, label: str) -> bool:
        return label in self._kind

    def kind(self, label: str) -> str:
        try:
            return self._kind[label]
        except KeyError:
            raise UnknownLabel(f"label not in taxonomy: {label!r}") from None

    def is_static(self, label: str) -> bool:
        return self.kind(label) == STATIC

    def canonical_order(self, labels: Iterable[str]) -> tuple[str, ...]:
        """Deduplicate and sort: static labels first, then lexicographic."""
        uniq = set(labels)
        for label in uniq:
            if label not in self._kind:
                raise UnknownLabel(f"label not in taxonomy: {label!r}")
        return tuple(sorted(uniq, key=lambda l: (self._kind[l] != STATIC, l)))

    def match_words(self, words: Sequence[str]) -> tuple[list[str], list[str]]:
        """Greedy longest-match of a word run against the label lexicon.

        Returns (matched labels in order, unmatched words in order).
        """
        labels: list[str] = []
        unknown: list[str] = []
        i = 0
        n = len(words)
        while i < n:
            for k in range(min(self._max_words, n - i), 0, -1):
                cand = " ".join(words[i : i + k])
                if cand in self._kind:
                    labels.append(cand)
                    i += k
                    break
            else:
                unknown.append(words[i])
                i += 1
        return labels, unknown

    def sha256(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    def to_text(self) -> str:
        return "".join(f"{label}\t{kind}\n" for label, kind in self.entries)

    @classmethod
    def from_text(cls, text: str) -> "Taxonomy":
        entries = []
        for ln, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"taxonomy line {ln}: expected 'label<TAB>kind'")
            entries.append((parts[0].strip(), parts[1].strip()))
        return cls(tuple(entries))

    @classmethod
    def load(cls, path: str | Path) -> "Taxonomy":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")


DEFAULT_TAXONOMY = Taxonomy(_DEFAULT_LABELS)


def _check_finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise NonFiniteCoordinate(f"{what} is not finite: {value!r}")
    return float(value)


@dataclass(frozen=True)
class SceneObject:
    """One scene participant or map sample point, as a labeled map point."""

    id: str
    label: str
    x: float
    y: float

    def __post_init__(self):
        _check_finite(self.x, f"object {self.id!r} x")
        _check_finite(self.y, f"object {self.id!r} y")


@dataclass(frozen=True)
class EgoPose:
    """Ego position and heading. Heading is normalized into [0, 360)."""

    x: float
    y: float
    heading_deg: float

    def __post_init__(self):
        _check_finite(self.x, "ego x")
        _check_finite(self.y, "ego y")
        _check_finite(self.heading_deg, "ego heading")
        object.__setattr__(self, "heading_deg", self.heading_deg % 360.0)


@dataclass(frozen=True)
class Scene:
    """One timestamped frame: ego pose, participants, and sequence links."""

    scene_id: str
    sequence_id: str
    timestamp_us: int
    country: str
    ego: EgoPose
    objects: tuple[SceneObject, ...]
    prev: str | None = None
    next: str | None = None


@dataclass(frozen=True)
class PairMeta:
    """Ego motion between two consecutive scenes.

    ``orientation_diff_deg`` is the heading change, positive for a
    counter-clockwise turn, normalized to (-180, 180].
    """

    country: str
    dist_m: float
    orientation_diff_deg: float

    def __post_init__(self):
        _check_finite(self.dist_m, "dist_m")
        _check_finite(self.orientation_diff_deg, "orientation_diff_deg")
        if self.dist_m < 0:
            raise ValueError(f"dist_m must be >= 0, got {self.dist_m}")
        if not (-180.0 < self.orientation_diff_deg <= 180.0):
            raise ValueError(
                f"orientation_diff_deg must lie in (-180, 180], got {self.orientation_diff_deg}"
            )


def normalize_angle_diff(deg: float) -> float:
    """Map an angle difference in degrees into (-180, 180]."""
    d = deg % 360.0
    if d > 180.0:
        d -= 360.0
    return d


# --- record ingestion ------------------------------------------------------

_SCENE_FIELDS = {"scene_id", "sequence_id", "timestamp_us", "country", "ego", "objects", "prev", "next"}
_EGO_FIELDS = {"x", "y", "heading_deg"}
_OBJECT_FIELDS = {"id", "label", "x", "y"}


def _req(record: Mapping, key: str, where: str):
    if key not in record:
        raise MalformedRecord(f"{where}: missing field {key!r}")
    return record[key]


def _as_str(value, what: str) -> str:
    if not isinstance(value, str):
        raise MalformedRecord(f"{what} must be a string, got {type(value).__name__}")
    return value


def _as_num(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedRecord(f"{what} must be a number, got {type(value).__name__}")
    return _check_finite(float(value), what)


def parse_scene_record(
    line: str,
    taxonomy: Taxonomy = DEFAULT_TAXONOMY,
    *,
    strict: bool = True,
) -> Scene:
    """Parse one JSONL scene record into a :class:`Scene`.

    Raises MalformedRecord on syntax/shape problems, UnknownLabel for labels
    outside ``taxonomy`` and NonFiniteCoordinate for NaN/inf coordinates.
    """
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON: {exc}") from None
    if not isinstance(record, dict):
        raise MalformedRecord("record must be a JSON object")

    unknown = set(record) - _SCENE_FIELDS
    if unknown:
        if strict:
            raise MalformedRecord(f"unknown fields: {sorted(unknown)}")
        log.warning("ignoring unknown scene fields: %s", sorted(unknown))

    scene_id = _as_str(_req(record, "scene_id", "record"), "scene_id")
    where = f"scene {scene_id!r}"
    sequence_id = _as_str(_req(record, "sequence_id", where), "sequence_id")
    timestamp = _req(record, "timestamp_us", where)
    if isinstance(timestamp, bool) or not isinstance(timestamp, int):
        raise MalformedRecord(f"{where}: timestamp_us must be an integer")
    country = _as_str(_req(record, "country", where), "country")

    ego_rec = _req(record, "ego", where)
    if not isinstance(ego_rec, dict):
        raise MalformedRecord(f"{where}: ego must be an object")
    extra = set(ego_rec) - _EGO_FIELDS
    if extra:
        if strict:
            raise MalformedRecord(f"{where}: unknown ego fields: {sorted(extra)}")
        log.warning("%s: ignoring unknown ego fields: %s", where, sorted(extra))
    ego = EgoPose(
        x=_as_num(_req(ego_rec, "x", f"{where} ego"), "ego x"),
        y=_as_num(_req(ego_rec, "y", f"{where} ego"), "ego y"),
        heading_deg=_as_num(_req(ego_rec, "heading_deg", f"{where} ego"), "ego heading_deg"),
    )

    objects_rec = _req(record, "objects", where)
    if not isinstance(objects_rec, list):
        raise MalformedRecord(f"{where}: objects must be a list")
    objects = []
    for k, obj in enumerate(objects_rec):
        if not isinstance(obj, dict):
            raise MalformedRecord(f"{where}: object #{k} must be an object")
        extra = set(obj) - _OBJECT_FIELDS
        if extra:
            if strict:
                raise MalformedRecord(f"{where}: object #{k}: unknown fields: {sorted(extra)}")
            log.warning("%s: object #%d: ignoring unknown fields: %s", where, k, sorted(extra))
        label = _as_str(_req(obj, "label", f"{where} object #{k}"), "label")
        if label not in taxonomy:
            raise UnknownLabel(f"{where}: object #{k}: label not in taxonomy: {label!r}")
        objects.append(
            SceneObject(
                id=_as_str(_req(obj, "id", f"{where} object #{k}"), "object id"),
                label=label,
                x=_as_num(_req(obj, "x", f"{where} object #{k}"), f"object #{k} x"),
                y=_as_num(_req(obj, "y", f"{where} object #{k}"), f"object #{k} y"),
            )
        )

    prev = record.get("prev")
    nxt = record.get("next")
    if prev is not None and not isinstance(prev, str):
        raise MalformedRecord(f"{where}: prev must be a string or null")
    if nxt is not None and not isinstance(nxt, str):
        raise MalformedRecord(f"{where}: next must be a string or null")

    return Scene(
        scene_id=scene_id,
        sequence_id=sequence_id,
        timestamp_us=timestamp,
        country=country,
        ego=ego,
        objects=tuple(objects),
        prev=prev,
        next=nxt,
    )


def render_scene_record(scene: Scene) -> str:
    """Serialize a Scene to one JSONL line (inverse of parse_scene_record)."""
    record = {
        "scene_id": scene.scene_id,
        "sequence_id": scene.sequence_id,
        "timestamp_us": scene.timestamp_us,
        "country": scene.country,
        "ego": {"x": scene.ego.x, "y": scene.ego.y, "heading_deg": scene.ego.heading_deg},
        "objects": [
            {"id": o.id, "label": o.label, "x": o.x, "y": o.y} for o in scene.objects
        ],
        "prev": scene.prev,
        "next": scene.next,
    }
    return json.dumps(record, separators=(",", ":"))


def load_scene_records(
    path: str | Path,
    taxonomy: Taxonomy = DEFAULT_TAXONOMY,
    *,
    strict: bool = True,
) -> list[Scene]:
    scenes = []
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                scenes.append(parse_scene_record(line, taxonomy, strict=strict))
            except (MalformedRecord, UnknownLabel, NonFiniteCoordinate) as exc:
                raise type(exc)(f"{path}:{ln}: {exc}") from None
    return scenes


# --- sequence assembly -----------------------------------------------------

def link_sequence(scenes: Sequence[Scene]) -> tuple[list[Scene], dict[str, int]]:
    """Order one sequence's scenes by timestamp and verify prev/next links.

    Returns the ordered scene list and an index mapping scene_id to its
    position in that list.
    """
    if not scenes:
        return [], {}
    seq_ids = {s.sequence_id for s in scenes}
    if len(seq_ids) != 1:
        raise BrokenChain(f"scenes from multiple sequences: {sorted(seq_ids)}")

    ordered = sorted(scenes, key=lambda s: s.timestamp_us)
    for a, b in zip(ordered, ordered[1:]):
        if a.timestamp_us == b.timestamp_us:
            raise DuplicateTimestamp(
                f"scenes {a.scene_id!r} and {b.scene_id!r} share timestamp {a.timestamp_us}"
            )
        if a.next != b.scene_id:
            raise BrokenChain(
                f"scene {a.scene_id!r} links next={a.next!r} but {b.scene_id!r} follows in time"
            )
        if b.prev != a.scene_id:
            raise BrokenChain(
                f"scene {b.scene_id!r} links prev={b.prev!r} but {a.scene_id!r} precedes in time"
            )
    if ordered[0].prev is not None:
        raise BrokenChain(f"first scene {ordered[0].scene_id!r} has prev={ordered[0].prev!r}")
    if ordered[-1].next is not None:
        raise BrokenChain(f"last scene {ordered[-1].scene_id!r} has next={ordered[-1].next!r}")

    index = {s.scene_id: i for i, s in enumerate(ordered)}
    if len(index) != len(ordered):
        raise BrokenChain("duplicate scene_id within sequence")
    return ordered, index


def group_sequences(scenes: Iterable[Scene]) -> list[list[Scene]]:
    """Group a corpus into linked sequences, ordered by sequence_id."""
    by_seq: dict[str, list[Scene]] = {}
    for scene in scenes:
        by_seq.setdefault(scene.sequence_id, []).append(scene)
    return [link_sequence(by_seq[sid])[0] for sid in sorted(by_seq)]


def pair_metadata(scene_t: Scene, scene_t1: Scene) -> PairMeta:
    """Ego travel distance and heading change between two linked scenes."""
    if scene_t.next != scene_t1.scene_id or scene_t1.prev != scene_t.scene_id:
        raise NotConsecutive(
            f"scenes {scene_t.scene_id!r} and {scene_t1.scene_id!r} are not linked neighbors"
        )
    if scene_t.sequence_id != scene_t1.sequence_id or scene_t.country != scene_t1.country:
        raise NotConsecutive(
            f"scenes {scene_t.scene_id!r} and {scene_t1.scene_id!r} belong to different sequences"
        )
    dist = math.hypot(scene_t1.ego.x - scene_t.ego.x, scene_t1.ego.y - scene_t.ego.y)
    diff = normalize_angle_diff(scene_t1.ego.heading_deg - scene_t.ego.heading_deg)
    return PairMeta(country=scene_t.country, dist_m=dist, orientation_diff_deg=diff)


def iter_scene_pairs(ordered: Sequence[Scene]) -> Iterator[tuple[Scene, Scene]]:
    for a, b in zip(ordered, ordered[1:]):
        yield a, b
