"""Synthetic scene sequences, corpus splitting, and dataset export.

The generator builds straight-road worlds: a multi-lane road along the map
x axis, walkways flanking it, pedestrian crossings with intersections and
stop areas at a regular spacing, and dynamic agents (vehicles on lanes,
pedestrians on walkways, street furniture at the road edge) moving at
constant velocity. The ego drives along its lane at a per-sequence speed.

Static layers are rectangles pre-sampled into points on a lattice with the
grid's cell pitch, anchored at the ego's starting pose, so a cell that
overlaps a layer observes exactly one sample point of it. Everything is
driven by per-sequence seeds derived from the corpus seed, so regeneration
is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .codec import SENTINELS, SPECIAL_TOKENS, tokens_to_text
from .errors import ConfigError, TooFewSequences
from .grid import GRID_PRESETS, GridSpec
from .masking import (
    NEXT_SCENE,
    SCENE_OBJECT,
    TASKS,
    MaskedSample,
    MaskPlan,
    build_next_scene_sample,
    build_pairs,
    remask_epoch,
)
from .scene import (
    DEFAULT_TAXONOMY,
    EGO_LABEL,
    EgoPose,
    Scene,
    SceneObject,
    Taxonomy,
    render_scene_record,
)

# Reference per-label occurrence counts of the corpus this pipeline mirrors;
# used as relative spawn weights for dynamic agents.
OCCURRENCE_WEIGHTS: Mapping[str, int] = {
    "walkway": 61879,
    "intersection": 51285,
    "pedestrian crossing": 22448,
    "turn stop area": 16684,
    "car park area": 14575,
    "traffic light stop area": 13618,
    "pedestrian crossing stop area": 9337,
    "stop sign area": 3615,
    "ego car": 3006,
    "car": 2780,
    "barrier": 2073,
    "traffic cone": 1536,
    "adult": 1122,
    "pushable pullable": 536,
    "truck": 323,
    "construction worker": 126,
    "bicycle": 102,
    "motorcycle": 87,
    "bus rigid": 66,
    "trailer": 43,
    "emergency police": 30,
    "construction vehicle": 23,
    "bicycle rack": 13,
    "child": 9,
    "debris": 8,
    "police officer": 8,
    "animal": 5,
    "stroller": 3,
}

_VEHICLE_LABELS = frozenset({
    "car", "truck", "bus rigid", "trailer", "emergency police",
    "construction vehicle", "motorcycle", "bicycle",
})
_PEDESTRIAN_LABELS = frozenset({
    "adult", "child", "construction worker", "police officer", "stroller", "animal",
})
_FURNITURE_LABELS = frozenset({
    "barrier", "traffic cone", "pushable pullable", "debris", "bicycle rack",
})

# The default world yields 40 walkway occurrences per scene (two strips, one
# lattice line each, 20 rows). Anchoring the spawn scale to that makes every
# dynamic label's expected per-scene occurrences proportional to the
# reference counts with the same constant, so occurrence ratios like
# walkway:car track the reference corpus.
_WALKWAY_CELLS_PER_SCENE = 40.0
_SPAWN_SCALE = _WALKWAY_CELLS_PER_SCENE / OCCURRENCE_WEIGHTS["walkway"]


def default_spawn_rates() -> dict[str, float]:
    """Expected in-range agents per scene for every spawnable label."""
    spawnable = _VEHICLE_LABELS | _PEDESTRIAN_LABELS | _FURNITURE_LABELS
    return {
        label: OCCURRENCE_WEIGHTS[label] * _SPAWN_SCALE
        for label in OCCURRENCE_WEIGHTS
        if label in spawnable
    }


@dataclass(frozen=True)
class SynthConfig:
    """Knobs of the synthetic world generator."""

    sequences: int = 10
    world_length_m: float = 400.0
    lane_count: int = 3
    lane_width_m: float = 3.5
    walkway_width_m: float = 2.0
    crossing_spacing_m: float = 80.0
    spawn_rates: Mapping[str, float] = field(default_factory=default_spawn_rates)
    ego_speed_range: tuple[float, float] = (6.0, 12.0)
    frame_interval_s: float = 0.5
    frames_per_sequence: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.sequences < 1:
            raise ConfigError("sequences must be >= 1")
        for name in ("world_length_m", "lane_width_m", "walkway_width_m",
                     "crossing_spacing_m", "frame_interval_s"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.lane_count < 1:
            raise ConfigError("lane_count must be >= 1")
        if self.frames_per_sequence < 2:
            raise ConfigError("frames_per_sequence must be >= 2 to form pairs")
        lo, hi = self.ego_speed_range
        if not (0 < lo <= hi):
            raise ConfigError("ego_speed_range must satisfy 0 < min <= max")
        for label, rate in self.spawn_rates.items():
            if rate < 0:
                raise ConfigError(f"spawn rate for {label!r} must be >= 0")

    def to_dict(self) -> dict:
        return {
            "sequences": self.sequences,
            "world_length_m": self.world_length_m,
            "lane_count": self.lane_count,
            "lane_width_m": self.lane_width_m,
            "walkway_width_m": self.walkway_width_m,
            "crossing_spacing_m": self.crossing_spacing_m,
            "spawn_rates": dict(sorted(self.spawn_rates.items())),
            "ego_speed_range": list(self.ego_speed_range),
            "frame_interval_s": self.frame_interval_s,
            "frames_per_sequence": self.frames_per_sequence,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SynthConfig":
        kwargs = dict(data)
        if "ego_speed_range" in kwargs:
            kwargs["ego_speed_range"] = tuple(kwargs["ego_speed_range"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad generator config: {exc}") from None


def _derived_rng(seed: int, *parts) -> random.Random:
    digest = hashlib.sha256(
        (str(seed) + ":" + ":".join(str(p) for p in parts)).encode("utf-8")
    ).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _poisson(rng: random.Random, lam: float) -> int:
    if lam <= 0:
        return 0
    threshold = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return k
        k += 1


@dataclass(frozen=True)
class _Rect:
    label: str
    x0: float
    x1: float
    y0: float
    y1: float


@dataclass(frozen=True)
class _Agent:
    id: str
    label: str
    x: float
    y: float
    vx: float
    vy: float

    def at(self, t: float) -> tuple[float, float]:
        return self.x + self.vx * t, self.y + self.vy * t


def _lattice_values(lo: float, hi: float, anchor: float, step: float) -> list[float]:
    """Lattice points anchor + k*step inside [lo, hi]."""
    k0 = math.ceil((lo - anchor) / step)
    k1 = math.floor((hi - anchor) / step)
    return [anchor + k * step for k in range(k0, k1 + 1)]


def _sample_rect(
    rect: _Rect, anchor_x: float, anchor_y: float, step_x: float, step_y: float
) -> list[tuple[float, float]]:
    xs = _lattice_values(rect.x0, rect.x1, anchor_x, step_x)
    ys = _lattice_values(rect.y0, rect.y1, anchor_y, step_y)
    return [(x, y) for x in xs for y in ys]


_STOP_AREA_CYCLE = (
    "traffic light stop area",
    "turn stop area",
    "pedestrian crossing stop area",
    "stop sign area",
)


def _build_world(
    config: SynthConfig, grid: GridSpec, rng: random.Random, seq_id: str
) -> tuple[list[_Rect], list[_Agent], float, float]:
    """Static layout plus agents for one sequence.

    Returns (rects, agents, ego_start_x, ego_lane_y). The ego drives east at
    y = 0; the road is placed around it according to the chosen lane.
    """
    lane_w = config.lane_width_m
    road_w = config.lane_count * lane_w
    ego_lane = rng.randrange(config.lane_count)
    road_y0 = -(ego_lane + 0.5) * lane_w  # ego sits at lane center, y = 0
    road_y1 = road_y0 + road_w
    ww = config.walkway_width_m

    rects = [
        _Rect("lane", 0.0, config.world_length_m, road_y0, road_y1),
        _Rect("walkway", 0.0, config.world_length_m, road_y0 - ww, road_y0),
        _Rect("walkway", 0.0, config.world_length_m, road_y1, road_y1 + ww),
    ]

    phase = rng.uniform(0.0, config.crossing_spacing_m)
    cx = phase
    crossing_idx = 0
    while cx < config.world_length_m:
        rects.append(_Rect("pedestrian crossing", cx - 1.5, cx + 1.5, road_y0, road_y1))
        rects.append(_Rect("intersection", cx - 5.0, cx + 5.0, road_y0, road_y1))
        stop_label = _STOP_AREA_CYCLE[crossing_idx % len(_STOP_AREA_CYCLE)]
        rects.append(_Rect(stop_label, cx - 8.0, cx - 5.0, road_y0, road_y1))
        if rng.random() < 0.5:
            side = rng.choice((road_y0 - ww, road_y1))
            px = cx + rng.uniform(10.0, max(10.0, config.crossing_spacing_m - 25.0))
            rects.append(_Rect("car park area", px, px + 12.0, side, side + ww))
        cx += config.crossing_spacing_m
        crossing_idx += 1

    # Agents are spawned along a span wide enough that drift during the
    # sequence keeps the in-range density stationary.
    duration = config.frames_per_sequence * config.frame_interval_s
    ego_start = grid.rear_m + 10.0
    ego_end = ego_start + config.ego_speed_range[1] * duration
    drift = 14.0 * duration + 20.0
    span0 = ego_start - grid.rear_m - drift
    span1 = ego_end + grid.front_m + drift
    span_len = span1 - span0
    window = grid.front_m + grid.rear_m

    agents: list[_Agent] = []
    counter = 0
    for label in sorted(config.spawn_rates):
        rate = config.spawn_rates[label]
        count = _poisson(rng, rate * span_len / window)
        for _ in range(count):
            x = rng.uniform(span0, span1)
            if label in _VEHICLE_LABELS:
                lane = rng.randrange(config.lane_count)
                y = road_y0 + (lane + 0.5) * lane_w
                direction = -1.0 if lane < config.lane_count // 2 else 1.0
                speed = rng.uniform(4.0, 14.0)
                if label == "bicycle":
                    speed = rng.uniform(2.0, 6.0)
                vx, vy = direction * speed, 0.0
            elif label in _PEDESTRIAN_LABELS:
                strip = rng.choice(((road_y0 - ww, road_y0), (road_y1, road_y1 + ww)))
                y = rng.uniform(*strip)
                vx, vy = rng.choice((-1.0, 1.0)) * rng.uniform(0.5, 1.5), 0.0
            else:  # street furniture sits still at the road edge
                edge = rng.choice((road_y0, road_y1))
                y = edge + rng.uniform(-0.4, 0.4)
                vx, vy = 0.0, 0.0
            agents.append(
                _Agent(id=f"{seq_id}-ag{counter}", label=label, x=x, y=y, vx=vx, vy=vy)
            )
            counter += 1

    return rects, agents, ego_start, 0.0


def synth_sequence(
    config: SynthConfig,
    grid: GridSpec,
    taxonomy: Taxonomy,
    seq_index: int,
) -> list[Scene]:
    """Generate one linked sequence of scenes."""
    seq_id = f"seq{seq_index:04d}"
    rng = _derived_rng(config.seed, "sequence", seq_index)
    country = rng.choice(("US", "SG"))
    speed = rng.uniform(*config.ego_speed_range)
    dt = config.frame_interval_s

    needed = grid.rear_m + 10.0 + (config.frames_per_sequence - 1) * speed * dt + grid.front_m
    if needed > config.world_length_m:
        raise ConfigError(
            f"world_length_m={config.world_length_m} too short for "
            f"{config.frames_per_sequence} frames at {speed:.1f} m/s (needs {needed:.1f})"
        )

    rects, agents, ego_start, ego_y = _build_world(config, grid, rng, seq_id)

    for label in config.spawn_rates:
        if label not in taxonomy:
            raise ConfigError(f"spawn label not in taxonomy: {label!r}")

    # Lattice anchored at the starting pose: one sample point per grid cell
    # a layer overlaps, as long as the ego advances in multiples of the cell
    # pitch; arbitrary speeds still land one point in almost every cell.
    anchor_x = ego_start - grid.rear_m + grid.cell_h / 2.0
    anchor_y = ego_y - grid.left_m + grid.cell_w / 2.0
    layer_points: list[tuple[str, float, float, str]] = []
    for idx, rect in enumerate(rects):
        for px, py in _sample_rect(rect, anchor_x, anchor_y, grid.cell_h, grid.cell_w):
            layer_points.append((f"{seq_id}-st{idx}-{len(layer_points)}", px, py, rect.label))

    lat_reach = max(grid.left_m, grid.right_m) + grid.cell_w

    scenes: list[Scene] = []
    base_ts = seq_index * 10**9
    step_us = int(round(dt * 1e6))
    for frame in range(config.frames_per_sequence):
        t = frame * dt
        ex = ego_start + speed * t
        x_lo, x_hi = ex - grid.rear_m - grid.cell_h, ex + grid.front_m + grid.cell_h
        objects = [
            SceneObject(id=pid, label=label, x=px, y=py)
            for pid, px, py, label in layer_points
            if x_lo <= px <= x_hi
        ]
        for agent in agents:
            ax, ay = agent.at(t)
            if x_lo <= ax <= x_hi and abs(ay - ego_y) <= lat_reach:
                objects.append(SceneObject(id=agent.id, label=agent.label, x=ax, y=ay))
        scene_id = f"{seq_id}-f{frame:03d}"
        scenes.append(
            Scene(
                scene_id=scene_id,
                sequence_id=seq_id,
                timestamp_us=base_ts + frame * step_us,
                country=country,
                ego=EgoPose(x=ex, y=ego_y, heading_deg=0.0),
                objects=tuple(objects),
                prev=f"{seq_id}-f{frame - 1:03d}" if frame > 0 else None,
                next=f"{seq_id}-f{frame + 1:03d}" if frame + 1 < config.frames_per_sequence else None,
            )
        )
    return scenes


def synth_sequences(
    config: SynthConfig,
    grid: GridSpec = GRID_PRESETS["default-20x11"],
    taxonomy: Taxonomy = DEFAULT_TAXONOMY,
) -> list[list[Scene]]:
    """Generate the configured number of sequences, deterministically."""
    return [
        synth_sequence(config, grid, taxonomy, idx) for idx in range(config.sequences)
    ]


# --- splitting ---------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    """Sequence-level split ratios; whole sequences go to one side."""

    train: float = 0.8
    val: float = 0.1
    test: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("train", "val", "test"):
            if getattr(self, name) < 0:
                raise ConfigError(f"split ratio {name} must be >= 0")
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ConfigError("split ratios must sum to 1")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "SplitSpec":
        parts = text.split(",")
        if len(parts) != 3:
            raise ConfigError("split must be three comma-separated ratios")
        train, val, test = (float(p) for p in parts)
        return cls(train=train, val=val, test=test, seed=seed)


@dataclass(frozen=True)
class SplitResult:
    train: tuple[list[Scene], ...]
    val: tuple[list[Scene], ...]
    test: tuple[list[Scene], ...]

    def by_name(self) -> dict[str, tuple[list[Scene], ...]]:
        return {"train": self.train, "val": self.val, "test": self.test}


def split(sequences: Sequence[list[Scene]], spec: SplitSpec) -> SplitResult:
    """Assign whole sequences to train/val/test by seeded shuffle.

    Sizes follow the ratios by largest remainder, so they are exact when the
    ratios divide the corpus and within one sequence otherwise.
    """
    if len(sequences) < 10:
        raise TooFewSequences(f"need >= 10 sequences to split, got {len(sequences)}")
    n = len(sequences)
    ratios = (spec.train, spec.val, spec.test)
    base = [int(r * n) for r in ratios]
    remainders = [r * n - b for r, b in zip(ratios, base)]
    for _ in range(n - sum(base)):
        k = max(range(3), key=lambda i: (remainders[i], -i))
        base[k] += 1
        remainders[k] = -1.0
    order = list(range(n))
    random.Random(spec.seed).shuffle(order)
    picks = [sequences[i] for i in order]
    train = tuple(picks[: base[0]])
    val = tuple(picks[base[0] : base[0] + base[1]])
    test = tuple(picks[base[0] + base[1] :])
    return SplitResult(train=train, val=val, test=test)


# --- export ------------------------------------------------------------------

EXPORT_FORMAT_VERSION = 1


def sample_to_record(sample: MaskedSample) -> str:
    record = {
        "sample_id": sample.sample_id,
        "scene_t": sample.scene_t_id,
        "scene_t1": sample.scene_t1_id,
        "task": sample.task,
        "input": tokens_to_text(sample.input_tokens),
        "target": tokens_to_text(sample.target_tokens),
        "plan": {
            "masked_t": [list(rc) for rc in sample.plan.masked_cells_t],
            "masked_t1": [list(rc) for rc in sample.plan.masked_cells_t1],
        },
    }
    return json.dumps(record, separators=(",", ":"))


def record_to_sample(line: str) -> MaskedSample:
    record = json.loads(line)
    plan = MaskPlan(
        task=record["task"],
        masked_cells_t=tuple((r, c) for r, c in record["plan"]["masked_t"]),
        masked_cells_t1=tuple((r, c) for r, c in record["plan"]["masked_t1"]),
    )
    return MaskedSample(
        sample_id=record["sample_id"],
        scene_t_id=record["scene_t"],
        scene_t1_id=record["scene_t1"],
        task=record["task"],
        input_tokens=tuple(record["input"].split()),
        target_tokens=tuple(record["target"].split()),
        plan=plan,
    )


def load_samples(path: str | Path) -> list[MaskedSample]:
    with open(path, encoding="utf-8") as fh:
        return [record_to_sample(line) for line in fh if line.strip()]


def _write_lines(path: Path, lines: Iterable[str]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
            count += 1
    return count


def _split_samples(
    split_sequences: Sequence[list[Scene]],
    task: str,
    grid: GridSpec,
    taxonomy: Taxonomy,
    base_seed: int,
    epoch: int,
) -> Iterable[MaskedSample]:
    for sequence in split_sequences:
        pairs = build_pairs(sequence, grid, taxonomy)
        if task == SCENE_OBJECT:
            yield from remask_epoch(pairs, epoch, base_seed)
        else:
            for pair in pairs:
                yield build_next_scene_sample(pair)


def export(
    sequences: Sequence[list[Scene]],
    task: str,
    out_dir: str | Path,
    *,
    grid: GridSpec,
    taxonomy: Taxonomy = DEFAULT_TAXONOMY,
    split_spec: SplitSpec | None = None,
    base_seed: int = 0,
    epochs: int = 1,
    grid_preset: str | None = None,
) -> dict:
    """Split a corpus, build task samples, and write the dataset directory.

    Writes ``scenes.jsonl``, one sample file per split (plus one per extra
    training epoch for the cell-prediction task, carrying fresh mask
    placements), and a manifest describing grid, taxonomy, seeds, and split
    assignment. Returns the manifest dict.
    """
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; expected one of {TASKS}")
    if epochs < 1:
        raise ConfigError("epochs must be >= 1")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    split_spec = split_spec or SplitSpec(seed=base_seed)
    result = split(sequences, split_spec)

    _write_lines(
        out / "scenes.jsonl",
        (render_scene_record(s) for seq in sequences for s in seq),
    )

    counts: dict[str, int] = {}
    files: dict[str, list[str]] = {}
    for name, seqs in result.by_name().items():
        epoch_count = epochs if (task == SCENE_OBJECT and name == "train") else 1
        names = []
        for epoch in range(epoch_count):
            file_name = f"{name}.jsonl" if epoch == 0 else f"{name}.epoch{epoch}.jsonl"
            written = _write_lines(
                out / file_name,
                (
                    sample_to_record(s)
                    for s in _split_samples(seqs, task, grid, taxonomy, base_seed, epoch)
                ),
            )
            names.append(file_name)
            if epoch == 0:
                counts[name] = written
        files[name] = names

    manifest = {
        "format_version": EXPORT_FORMAT_VERSION,
        "task": task,
        "base_seed": base_seed,
        "epochs": epochs,
        "grid": grid.to_dict(),
        "grid_preset": grid_preset,
        "taxonomy": [list(entry) for entry in taxonomy.entries],
        "taxonomy_sha256": taxonomy.sha256(),
        "special_tokens": list(SPECIAL_TOKENS),
        "sentinel_tokens": list(SENTINELS),
        "split": {
            name: [seq[0].sequence_id for seq in seqs]
            for name, seqs in result.by_name().items()
        },
        "split_ratios": [split_spec.train, split_spec.val, split_spec.test],
        "split_seed": split_spec.seed,
        "scenes_file": "scenes.jsonl",
        "files": files,
        "counts": counts,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest
