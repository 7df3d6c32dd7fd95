"""llse-train command line: train a mask estimator and export NMWF weights."""

from __future__ import annotations

import argparse
import json
import sys

from .train import TrainConfig, train


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="llse-train",
        description="Train a GRU or U-Net mask estimator on an engine "
                    "mixture manifest and export engine-compatible weights")
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--model", choices=("gru", "unet"), default="gru")
    parser.add_argument("--out", required=True, help="weight file to write")
    parser.add_argument("--max-epochs", type=int, default=80)
    parser.add_argument("--patience", type=int, default=20)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--log", default=None,
                        help="line-delimited JSON training log")
    args = parser.parse_args(argv)
    config = TrainConfig(manifest=args.manifest, model_kind=args.model,
                         export_path=args.out, max_epochs=args.max_epochs,
                         patience=args.patience, batch_size=args.batch_size,
                         seed=args.seed, log_path=args.log)
    try:
        result = train(config)
    except (OSError, ValueError) as exc:
        print(f"llse-train: error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(result["summary"], indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
