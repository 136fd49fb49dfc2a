"""Command-line front end: train, evaluate, and serve checkpoints."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .data import DatasetError, load_dataset
from .model import ModelConfig, load_checkpoint, save_checkpoint
from .serve import serve
from .train import TrainConfig, evaluate, train

EXIT_OK = 0
EXIT_ARGS = 1
EXIT_DATASET = 2


def cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    names = tuple(dataset.class_names)
    model_cfg = ModelConfig(side=args.side, grid=args.grid,
                            num_classes=len(names), class_names=names)
    train_cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                            learning_rate=args.learning_rate, seed=args.seed,
                            conf_threshold=args.conf_threshold)
    model, metrics = train(dataset, model_cfg, train_cfg,
                           log=lambda msg: print(msg, file=sys.stderr))
    save_checkpoint(model, args.checkpoint, metrics)
    print(json.dumps(metrics, sort_keys=True))
    return EXIT_OK


def cmd_eval(args) -> int:
    dataset = load_dataset(args.dataset)
    model = load_checkpoint(args.checkpoint)
    items = dataset.val or dataset.train
    if args.min_snr_db is not None:
        items = [it for it in items if it.snr_db >= args.min_snr_db]
    metrics = evaluate(model, items, args.conf_threshold)
    print(json.dumps(metrics, sort_keys=True))
    return EXIT_OK


def cmd_serve(args) -> int:
    model = load_checkpoint(args.checkpoint)
    return serve(model, image_path=args.image,
                 conf_threshold=args.conf_threshold)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfidet", description="Neural sub-pulse detector")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--side", type=int, default=256)
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--conf-threshold", type=float, default=0.5)

    p = sub.add_parser("eval")
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--conf-threshold", type=float, default=0.5)
    p.add_argument("--min-snr-db", type=float, default=None)

    p = sub.add_parser("serve")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--conf-threshold", type=float, default=0.5)
    p.add_argument("image", nargs="?", default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return {"train": cmd_train, "eval": cmd_eval,
                "serve": cmd_serve}[args.command](args)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
