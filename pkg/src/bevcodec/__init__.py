"""bevcodec: ego-centric BEV scene grids as token sequences, plus the task
pipeline built on them (masked-span construction, scoring, baselines, and a
synthetic corpus generator)."""

from .codec import (
    SENTINELS,
    SPECIAL_TOKENS,
    ParsedPair,
    ParsedTargets,
    SpanTargets,
    parse_sequence,
    parse_targets,
    render_targets,
    serialize_matrix,
    serialize_pair,
)
from .grid import GRID_PRESETS, AreaMatrix, GridSpec, assign_cell, rasterize, to_ego_frame
from .masking import (
    CentralRegion,
    MaskedSample,
    MaskPlan,
    ScenePair,
    build_next_scene_sample,
    build_pairs,
    build_scene_object_sample,
    central_region,
    remask_epoch,
)
from .metrics import MetricsReport, aggregate, render_report, score
from .scene import (
    DEFAULT_TAXONOMY,
    EGO_LABEL,
    EgoPose,
    PairMeta,
    Scene,
    SceneObject,
    Taxonomy,
    link_sequence,
    pair_metadata,
    parse_scene_record,
    render_scene_record,
)

__version__ = "0.1.0"

__all__ = [
    "AreaMatrix",
    "CentralRegion",
    "DEFAULT_TAXONOMY",
    "EGO_LABEL",
    "EgoPose",
    "GRID_PRESETS",
    "GridSpec",
    "MaskPlan",
    "MaskedSample",
    "MetricsReport",
    "PairMeta",
    "ParsedPair",
    "ParsedTargets",
    "SENTINELS",
    "SPECIAL_TOKENS",
    "Scene",
    "SceneObject",
    "ScenePair",
    "SpanTargets",
    "Taxonomy",
    "aggregate",
    "assign_cell",
    "build_next_scene_sample",
    "build_pairs",
    "build_scene_object_sample",
    "central_region",
    "link_sequence",
    "pair_metadata",
    "parse_scene_record",
    "parse_sequence",
    "parse_targets",
    "rasterize",
    "remask_epoch",
    "render_report",
    "render_scene_record",
    "render_targets",
    "score",
    "serialize_matrix",
    "serialize_pair",
    "to_ego_frame",
    "__version__",
]
