"""Command-line entry points.

    phantomnet train --data <dir> --out <ckpt> [--preset mini|reference]
                     [--epochs N] [--batch-size N] [--patch N] [--lr F] [--seed N]
    phantomnet infer --ckpt <path> --in <file> --out <file>

Exit status is 0 on success and 1 on any reported failure; the reconstruction
toolkit drives ``infer`` as an external subprocess and relies on that code.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .infer import infer
from .model import NetConfig
from .train import TrainConfig, load_pairs, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phantomnet",
        description="Train and apply the invisible-subband estimator.",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command")

    train_p = sub.add_parser("train", help="fit a network on paired tensor files")
    train_p.add_argument("--data", required=True, help="directory of *_input.lti / *_target.lti pairs")
    train_p.add_argument("--out", required=True, help="checkpoint output path")
    train_p.add_argument("--preset", choices=("mini", "reference"), default="mini")
    train_p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    train_p.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    train_p.add_argument("--patch", type=int, default=TrainConfig.patch_size)
    train_p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    train_p.add_argument("--seed", type=int, default=TrainConfig.seed)
    train_p.add_argument("--quiet", action="store_true", help="suppress per-step loss logging")

    infer_p = sub.add_parser("infer", help="estimate invisible subbands for one file")
    infer_p.add_argument("--ckpt", required=True, help="checkpoint path")
    infer_p.add_argument("--in", dest="in_path", required=True, help="input coefficient file")
    infer_p.add_argument("--out", required=True, help="output coefficient file")
    return parser


def _run_train(args: argparse.Namespace) -> int:
    if not args.quiet:
        logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    dataset = load_pairs(args.data)
    cfg = TrainConfig(
        learning_rate=args.lr,
        patch_size=args.patch,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    channels = dataset.inputs[0].shape[2]
    builder = NetConfig.mini if args.preset == "mini" else NetConfig.reference
    _, history = train(dataset, builder(channels), cfg, args.out)
    print(f"trained {len(history)} steps; final loss {history[-1]:.6e}; wrote {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        if args.command == "train":
            return _run_train(args)
        infer(args.ckpt, args.in_path, args.out)
        return 0
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
