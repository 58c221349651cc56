"""Harness entry point: train a model, predict a split."""

from __future__ import annotations

import argparse
import sys

from .evaluate import predict
from .model import PRESETS
from .train import TrainConfig, train


def _cmd_train(args) -> int:
    config = TrainConfig(
        data_dir=args.data,
        out_dir=args.out,
        preset=args.preset,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        max_samples=args.max_samples,
    )
    ckpt = train(config)
    print(f"checkpoint written to {ckpt}")
    return 0


def _cmd_predict(args) -> int:
    count = predict(
        args.ckpt, args.data, args.split, args.out,
        batch_size=args.batch_size, max_new_tokens=args.max_new_tokens,
    )
    print(f"wrote {count} predictions to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bevharness",
                                     description="seq2seq harness for exported BEV datasets")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on a dataset directory's train split")
    p.add_argument("--data", required=True, help="export directory (with manifest.json)")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--preset", default="tiny", choices=sorted(PRESETS))
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-samples", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="write predictions TSV for a split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--max-new-tokens", type=int, default=None)
    p.set_defaults(func=_cmd_predict)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
