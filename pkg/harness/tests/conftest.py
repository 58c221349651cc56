from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

SPECIAL_TOKENS = [
    "<country>", "<dist>", "<orientation_diff>", "<scene_start>",
    "<col_sep>", "<row_sep>", "<concept_sep>", "<empty>",
]
SENTINELS = [f"<extra_id_{i}>" for i in range(100)]
LABELS = ["lane", "walkway", "car", "pedestrian crossing"]


def _tiny_sample(rng: random.Random, idx: int) -> dict:
    """A structurally faithful miniature: 2x2 grid pair, one masked cell."""

    def cell():
        return rng.choice(LABELS + ["<empty>"])

    masked_value = cell()
    row1 = f"{cell()} <col_sep> {masked_value}"
    row2 = f"{cell()} <col_sep> {cell()}"
    scene_t = f"{row1} <row_sep> {row2}".replace(masked_value, "<extra_id_0>", 1)
    scene_t1 = f"{cell()} <col_sep> {cell()} <row_sep> {cell()} <col_sep> {cell()}"
    return {
        "sample_id": f"scene-object:s{idx}a->s{idx}b",
        "scene_t": f"s{idx}a",
        "scene_t1": f"s{idx}b",
        "task": "scene-object",
        "input": (
            f"<country> US <dist> 4.8 <orientation_diff> 0 "
            f"<scene_start> {scene_t} <scene_start> {scene_t1}"
        ),
        "target": f"<extra_id_0> {masked_value} <extra_id_1>",
        "plan": {"masked_t": [[1, 2]], "masked_t1": []},
    }


@pytest.fixture(scope="session")
def mini_dataset(tmp_path_factory) -> Path:
    """A miniature export directory in the documented dataset format."""
    out = tmp_path_factory.mktemp("mini_dataset")
    rng = random.Random(5)
    counts = {}
    files = {}
    for name, count in (("train", 24), ("val", 8), ("test", 8)):
        with open(out / f"{name}.jsonl", "w", encoding="utf-8") as fh:
            for k in range(count):
                fh.write(json.dumps(_tiny_sample(rng, f"{name}{k}")) + "\n")
        counts[name] = count
        files[name] = [f"{name}.jsonl"]
    manifest = {
        "format_version": 1,
        "task": "scene-object",
        "base_seed": 0,
        "epochs": 1,
        "grid": {"rows": 2, "cols": 2, "cell_h": 1.0, "cell_w": 1.0,
                 "front_m": 1.0, "rear_m": 1.0, "left_m": 1.0, "right_m": 1.0},
        "grid_preset": None,
        "taxonomy": [[l, "static"] for l in LABELS],
        "taxonomy_sha256": "0" * 64,
        "special_tokens": SPECIAL_TOKENS,
        "sentinel_tokens": SENTINELS,
        "split": {"train": [], "val": [], "test": []},
        "split_ratios": [0.8, 0.1, 0.1],
        "split_seed": 0,
        "scenes_file": "scenes.jsonl",
        "files": files,
        "counts": counts,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    (out / "scenes.jsonl").write_text("")
    return out
