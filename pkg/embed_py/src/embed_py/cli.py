"""Command-line front end for the encoder feature extractor."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .extract import ExtractionConfig, extract


def parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-py",
        description="Run a pretrained EfficientNet-B0 encoder over manifest images "
        "and write a binary feature table plus a provenance sidecar.",
    )
    parser.add_argument("--manifest", type=Path, required=True, help="dataset manifest (tab-separated)")
    parser.add_argument("--out", type=Path, required=True, help="output feature-table file")
    parser.add_argument(
        "--input-size", type=parse_size, default=(384, 544),
        help="resize images to HxW before encoding (default: 384x544)",
    )
    parser.add_argument(
        "--stage", type=int, default=None,
        help="number of leading encoder stages to run (default: all = deepest output)",
    )
    parser.add_argument(
        "--weights", default="imagenet",
        help="'imagenet' (pretrained download), 'random' (seeded offline init), "
        "or a local .pth state-dict path (default: imagenet)",
    )
    parser.add_argument("--seed", type=int, default=0, help="init seed for --weights random (default: 0)")
    parser.add_argument("--batch-size", type=int, default=1, help="inference batch size (default: 1)")
    parser.add_argument("--sidecar", type=Path, default=None,
                        help="provenance JSON path (default: <out>.provenance.json)")
    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    config = ExtractionConfig(
        manifest=args.manifest,
        out=args.out,
        input_size=args.input_size,
        stage=args.stage,
        weights=args.weights,
        seed=args.seed,
        batch_size=args.batch_size,
        sidecar=args.sidecar,
    )
    try:
        provenance = extract(config)
    except Exception as exc:
        print(f"embed-py: error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {provenance['images']} vectors of dim {provenance['dim']} "
        f"({provenance['backbone']}, stage {provenance['stage']}) to {config.out}"
    )
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
