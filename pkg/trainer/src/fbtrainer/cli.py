"""Trainer command line: train on .pnft records, export .pnwt weights."""

import argparse
import sys

from .config import TrainConfig
from .data import load_dataset
from .export import export_quantized
from .train import train


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fbtrain", description="Train the band-gain/strength model")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train and export quantized weights")
    p.add_argument("--data", required=True, help=".pnft file or directory")
    p.add_argument("--config", help="TrainConfig JSON (defaults otherwise)")
    p.add_argument("--out", required=True, help="output .pnwt path")
    p.add_argument("--quiet", action="store_true")

    args = parser.parse_args(argv)
    try:
        cfg = TrainConfig.from_json(args.config) if args.config else TrainConfig()
        records = load_dataset(args.data)
        log = None if args.quiet else lambda msg: print(msg, file=sys.stderr)
        result = train(records, cfg, log=log)
        export_quantized(result.net, args.out)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    drop = 100.0 * (1.0 - result.final_loss / result.initial_loss)
    print(f"loss {result.initial_loss:.6f} -> {result.final_loss:.6f} "
          f"({drop:.1f}% drop), quantized eval "
          f"{result.quantized_eval_losses[-1]:.6f}; wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
