"""Command-line pipeline: synth, rasterize, encode, mask, export, baseline, score.

Every command is a pure function of its inputs, flags, and seed; repeated
runs produce byte-identical artifacts. Data problems exit with status 1 and
a positioned diagnostic on stderr; usage problems exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import baselines, datagen, masking, metrics
from .codec import SpanTargets, parse_targets, render_targets, serialize_pair, tokens_to_text
from .errors import BevCodecError
from .grid import GRID_PRESETS, GridSpec, grid_by_name, rasterize
from .masking import NEXT_SCENE, SCENE_OBJECT, TASKS
from .scene import DEFAULT_TAXONOMY, Taxonomy, group_sequences, load_scene_records


def _load_taxonomy(path: str | None) -> Taxonomy:
    return Taxonomy.load(path) if path else DEFAULT_TAXONOMY


def _load_corpus(path: str, taxonomy: Taxonomy, strict: bool):
    scenes = load_scene_records(path, taxonomy, strict=strict)
    return group_sequences(scenes)


def _add_io_flags(p: argparse.ArgumentParser, *, grid: bool = True) -> None:
    p.add_argument("--taxonomy", help="taxonomy file (label<TAB>static|dynamic); default built-in")
    p.add_argument("--strict", action="store_true",
                   help="reject records with unknown fields instead of warning")
    if grid:
        p.add_argument("--grid", default="default-20x11",
                       help=f"grid preset ({', '.join(sorted(GRID_PRESETS))}) or JSON file")


def _cmd_synth(args) -> int:
    taxonomy = _load_taxonomy(args.taxonomy)
    grid = grid_by_name(args.grid)
    if args.config:
        config = datagen.SynthConfig.from_dict(json.loads(Path(args.config).read_text()))
        if args.seed is not None:
            config = datagen.SynthConfig.from_dict({**config.to_dict(), "seed": args.seed})
        if args.sequences is not None:
            config = datagen.SynthConfig.from_dict({**config.to_dict(), "sequences": args.sequences})
    else:
        if args.seed is None:
            raise BevCodecError("synth requires --seed (or a --config carrying one)")
        config = datagen.SynthConfig(
            sequences=args.sequences if args.sequences is not None else 10,
            seed=args.seed,
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sequences = datagen.synth_sequences(config, grid, taxonomy)
    with open(out / "scenes.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for sequence in sequences:
            for scene in sequence:
                fh.write(datagen.render_scene_record(scene))
                fh.write("\n")
    (out / "synth_config.json").write_text(
        json.dumps({"config": config.to_dict(), "grid": grid.to_dict()},
                   indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    scene_count = sum(len(s) for s in sequences)
    print(f"wrote {scene_count} scenes in {len(sequences)} sequences to {out}")
    return 0


def _cmd_rasterize(args) -> int:
    taxonomy = _load_taxonomy(args.taxonomy)
    grid = grid_by_name(args.grid)
    sequences = _load_corpus(args.input, taxonomy, args.strict)
    count = 0
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for sequence in sequences:
            for scene in sequence:
                matrix = rasterize(scene, grid, taxonomy)
                record = {
                    "scene_id": scene.scene_id,
                    "cells": [[list(cell) for cell in row] for row in matrix.cells],
                }
                fh.write(json.dumps(record, separators=(",", ":")))
                fh.write("\n")
                count += 1
    print(f"rasterized {count} scenes to {args.out}")
    return 0


def _cmd_encode(args) -> int:
    taxonomy = _load_taxonomy(args.taxonomy)
    grid = grid_by_name(args.grid)
    sequences = _load_corpus(args.input, taxonomy, args.strict)
    count = 0
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for sequence in sequences:
            for pair in masking.build_pairs(sequence, grid, taxonomy):
                tokens = serialize_pair(pair.matrix_t, pair.matrix_t1, pair.meta)
                record = {
                    "scene_t": pair.scene_t_id,
                    "scene_t1": pair.scene_t1_id,
                    "text": tokens_to_text(tokens),
                }
                fh.write(json.dumps(record, separators=(",", ":")))
                fh.write("\n")
                count += 1
    print(f"encoded {count} pairs to {args.out}")
    return 0


def _cmd_mask(args) -> int:
    if args.task == SCENE_OBJECT and args.seed is None:
        raise BevCodecError("mask --task scene-object requires --seed")
    taxonomy = _load_taxonomy(args.taxonomy)
    grid = grid_by_name(args.grid)
    sequences = _load_corpus(args.input, taxonomy, args.strict)
    count = 0
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for sequence in sequences:
            pairs = masking.build_pairs(sequence, grid, taxonomy)
            if args.task == SCENE_OBJECT:
                samples = masking.remask_epoch(pairs, args.epoch, args.seed)
            else:
                samples = (masking.build_next_scene_sample(p) for p in pairs)
            for sample in samples:
                fh.write(datagen.sample_to_record(sample))
                fh.write("\n")
                count += 1
    print(f"wrote {count} {args.task} samples to {args.out}")
    return 0


def _cmd_export(args) -> int:
    taxonomy = _load_taxonomy(args.taxonomy)
    grid = grid_by_name(args.grid)
    sequences = _load_corpus(args.input, taxonomy, args.strict)
    split_spec = datagen.SplitSpec.parse(args.split, seed=args.seed)
    manifest = datagen.export(
        sequences,
        args.task,
        args.out,
        grid=grid,
        taxonomy=taxonomy,
        split_spec=split_spec,
        base_seed=args.seed,
        epochs=args.epochs,
        grid_preset=args.grid if args.grid in GRID_PRESETS else None,
    )
    print(
        "exported "
        + ", ".join(f"{name}={n}" for name, n in sorted(manifest["counts"].items()))
        + f" samples to {args.out}"
    )
    return 0


def _read_manifest(data_dir: Path) -> dict:
    manifest_path = data_dir / "manifest.json"
    if not manifest_path.exists():
        raise BevCodecError(f"no manifest.json in {data_dir}")
    return json.loads(manifest_path.read_text(encoding="utf-8"))


def _dataset_context(data_dir: str):
    data = Path(data_dir)
    manifest = _read_manifest(data)
    taxonomy = Taxonomy(tuple((l, k) for l, k in manifest["taxonomy"]))
    grid = GridSpec.from_dict(manifest["grid"])
    return data, manifest, taxonomy, grid


def _split_pairs(data: Path, manifest: dict, split_name: str, grid, taxonomy):
    scenes = load_scene_records(data / manifest["scenes_file"], taxonomy, strict=True)
    wanted = set(manifest["split"][split_name])
    pairs = []
    for sequence in group_sequences(scenes):
        if sequence[0].sequence_id in wanted:
            pairs.extend(masking.build_pairs(sequence, grid, taxonomy))
    return pairs


def _cmd_baseline(args) -> int:
    data, manifest, taxonomy, grid = _dataset_context(args.data)
    samples = datagen.load_samples(data / f"{args.split}.jsonl")

    if args.model == "majority":
        if args.load_model:
            model = baselines.load_model(args.load_model)
        else:
            train_pairs = _split_pairs(data, manifest, "train", grid, taxonomy)
            model = baselines.majority_fit(train_pairs)
        if args.save_model:
            baselines.save_model(model, args.save_model)
        predictions = [
            (s.sample_id, baselines.majority_predict(model, s)) for s in samples
        ]
    else:  # persistence
        if manifest["task"] != NEXT_SCENE:
            raise BevCodecError("the persistence baseline only predicts next-scene datasets")
        eval_pairs = {
            p.pair_id: p for p in _split_pairs(data, manifest, args.split, grid, taxonomy)
        }
        predictions = []
        for sample in samples:
            pair = eval_pairs.get(f"{sample.scene_t_id}->{sample.scene_t1_id}")
            if pair is None:
                raise BevCodecError(f"sample {sample.sample_id} has no pair in {args.split}")
            predicted = baselines.persistence_predict(pair.matrix_t, pair.meta, grid, taxonomy)
            spans = tuple(
                predicted.cell(r, c) for _, _, r, c in sample.plan.sentinel_cells()
            )
            predictions.append((sample.sample_id, SpanTargets(spans=spans)))

    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for sample_id, spans in predictions:
            fh.write(f"{sample_id}\t{tokens_to_text(render_targets(spans))}\n")
    print(f"wrote {len(predictions)} predictions to {args.out}")
    return 0


def _cmd_score(args) -> int:
    data, manifest, taxonomy, grid = _dataset_context(args.data)
    samples = datagen.load_samples(data / f"{args.split}.jsonl")

    predictions: dict[str, str] = {}
    with open(args.pred, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise BevCodecError(f"{args.pred}:{ln}: expected 'sample_id<TAB>tokens'")
            sample_id, text = line.split("\t", 1)
            predictions[sample_id] = text

    reports = []
    for sample in samples:
        if sample.sample_id not in predictions:
            raise BevCodecError(f"missing prediction for sample {sample.sample_id}")
        expected = sample.plan.sentinel_count
        gold = parse_targets(sample.target_tokens, expected, taxonomy).targets
        pred = parse_targets(predictions[sample.sample_id], expected, taxonomy).targets
        reports.append(metrics.score(pred, gold, taxonomy))
    report = metrics.aggregate(reports)
    rendered = metrics.render_report(report, per_class=not args.no_per_class)
    print(rendered)
    if args.out:
        Path(args.out).write_text(rendered + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bevcodec",
        description="BEV symbolic scene codec and task pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene corpus")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sequences", type=int, default=None)
    p.add_argument("--config", help="generator config JSON file")
    p.add_argument("--out", required=True, help="output directory")
    _add_io_flags(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("rasterize", help="dump grid matrices for every scene")
    p.add_argument("--in", dest="input", required=True, help="scenes.jsonl")
    p.add_argument("--out", required=True)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_rasterize)

    p = sub.add_parser("encode", help="serialize consecutive pairs to token text")
    p.add_argument("--in", dest="input", required=True, help="scenes.jsonl")
    p.add_argument("--out", required=True)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("mask", help="build masked task samples")
    p.add_argument("--in", dest="input", required=True, help="scenes.jsonl")
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="required for the stochastic scene-object task")
    p.add_argument("--epoch", type=int, default=0, help="re-mask epoch index")
    p.add_argument("--out", required=True)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("export", help="split a corpus and write task datasets")
    p.add_argument("--in", dest="input", required=True, help="scenes.jsonl")
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--split", default="0.8,0.1,0.1")
    p.add_argument("--epochs", type=int, default=1,
                   help="training epochs to pre-materialize with fresh masks")
    p.add_argument("--out", required=True, help="output directory")
    _add_io_flags(p)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("baseline", help="fit/predict a reference model over a split")
    p.add_argument("--data", required=True, help="export directory")
    p.add_argument("--model", choices=("majority", "persistence"), required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--save-model", help="write the fitted majority model here")
    p.add_argument("--load-model", help="reuse a saved majority model")
    p.add_argument("--out", required=True, help="predictions TSV")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("score", help="score a predictions file against gold targets")
    p.add_argument("--data", required=True, help="export directory")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--pred", required=True, help="predictions TSV")
    p.add_argument("--out", help="also write the report JSON here")
    p.add_argument("--no-per-class", action="store_true")
    p.set_defaults(func=_cmd_score)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BevCodecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
