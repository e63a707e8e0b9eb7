"""Command-line pipeline: features, select, split, augment, evaluate, curves, loss.

Exit codes: 0 success, 1 runtime error, 2 usage error. All defaults mirror
the package's built-in constants, so a bare invocation reproduces the
reference configuration. Every subcommand is deterministic given identical
inputs and `--seed` (env `TRUESET_SEED` is the fallback), independent of
`--jobs`.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import eval as evalmod
from .augment import AugmentSpec, MODES, build_augmented_manifest
from .core_data import (
    BinaryMask,
    ProbabilityMap,
    load_manifest,
    read_mask,
    read_probability_map,
    write_feature_table,
    write_manifest,
)
from .embed import DEFAULT_GRID, DEFAULT_HIST_BINS, FeatureProvider, features_for
from .select import (
    TrueSplit,
    allset_split,
    apply_split,
    build_bins,
    distances_from_mean,
    emit_coordinates,
    pca_project,
    select_true_images,
    selection_quotas,
)
from .util import map_ordered


def _default_seed() -> int:
    return int(os.environ.get("TRUESET_SEED", "0"))


def _provider_from_args(args: argparse.Namespace) -> FeatureProvider:
    if args.provider == "file":
        if not args.features:
            raise ValueError("--provider file requires --features")
        return FeatureProvider.from_file(args.features)
    return FeatureProvider.builtin(args.grid, args.hist_bins)


def _add_provider_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--provider",
        choices=("file", "builtin"),
        default="builtin",
        help="feature source: a precomputed table (--features) or the builtin descriptor (default: builtin)",
    )
    parser.add_argument("--features", type=Path, help="feature table file for --provider file")
    parser.add_argument(
        "--grid", type=int, default=DEFAULT_GRID,
        help="builtin descriptor grid (default: 16)",
    )
    parser.add_argument(
        "--hist-bins", type=int, default=DEFAULT_HIST_BINS,
        help="builtin descriptor gradient-histogram buckets (default: 8)",
    )


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--jobs", type=int, default=1, help="worker threads; never changes outputs (default: 1)")


def _add_eval_inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pred-dir", type=Path, required=True, help="directory of <id>.png probability maps")
    parser.add_argument("--gt-manifest", type=Path, required=True, help="manifest providing ground-truth masks")
    parser.add_argument("--invert-masks", action="store_true", help="flip ground-truth polarity (dark = crack)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trueset",
        description="Curate representative training subsets of segmentation datasets, "
        "augment ground-truth masks, and score prediction probability maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="compute or re-export a feature table")
    p.add_argument("--manifest", type=Path, required=True)
    _add_provider_flags(p)
    p.add_argument("--out", type=Path, required=True, help="output feature-table file")
    _add_common_flags(p)

    p = sub.add_parser("select", help="select the representative train/val subset")
    p.add_argument("--manifest", type=Path, required=True)
    _add_provider_flags(p)
    p.add_argument("--n-bins", type=int, default=10, help="distance histogram bins (default: 10)")
    p.add_argument("--s", type=float, default=0.5, help="selection parameter in [0, 1] (default: 0.5)")
    p.add_argument("--components", type=int, choices=(1, 2), default=1,
                   help="principal components in the coordinate CSV (default: 1)")
    p.add_argument("--out", type=Path, required=True, help="output subset manifest")
    p.add_argument("--coords-out", type=Path,
                   help="coordinate CSV path (default: <out stem>_coords.csv)")
    _add_common_flags(p)

    p = sub.add_parser("split", help="plain 90-10 train/val split over all ids")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--ratio", type=float, default=0.90, help="train fraction (default: 0.9)")
    p.add_argument("--out", type=Path, required=True, help="output manifest")

    p = sub.add_parser("augment", help="write augmented ground-truth masks for a subset")
    p.add_argument("--trueset", type=Path, required=True, help="subset manifest with train/val tags")
    p.add_argument("--mode", choices=MODES, required=True,
                   help="sw = widen, sl = shorten, ss = fractional widen, mix = both")
    p.add_argument("--kernels", default=None,
                   help="comma-separated dilation kernel sizes (default: 3,5,8; mix: 3,5)")
    p.add_argument("--scale", type=int, default=4, help="scale-space upscale factor (default: 4)")
    p.add_argument("--t0", type=int, default=50, help="area below which components are untouched (default: 50)")
    p.add_argument("--t1", type=int, default=100, help="area bound for 1-3 cut squares (default: 100)")
    p.add_argument("--t2", type=int, default=200, help="area bound for 2-5 cut squares (default: 200)")
    p.add_argument("--seed", type=int, default=None,
                   help="global random seed (default: env TRUESET_SEED or 0)")
    p.add_argument("--out-dir", type=Path, required=True, help="directory for augmented mask PNGs")
    p.add_argument("--out", type=Path, help="augmented manifest path (default: <out-dir>/manifest.tsv)")
    p.add_argument("--invert-masks", action="store_true", help="flip ground-truth polarity (dark = crack)")
    _add_common_flags(p)

    p = sub.add_parser("evaluate", help="score probability maps against ground truth")
    _add_eval_inputs(p)
    p.add_argument("--threshold", type=float, default=0.5, help="binarization threshold (default: 0.5)")
    p.add_argument("--grid", action="store_true",
                   help="grid-search the threshold over 0.00..0.99 (step 0.01) instead")
    p.add_argument("--dataset-name", default=None, help="label for the CSV row (default: manifest stem)")
    p.add_argument("--out", type=Path, help="write the CSV here instead of stdout")
    _add_common_flags(p)

    p = sub.add_parser("curves", help="emit ROC or PR points over the threshold grid")
    _add_eval_inputs(p)
    p.add_argument("--curve", choices=("roc", "pr"), required=True)
    p.add_argument("--out", type=Path, required=True, help="output CSV")
    _add_common_flags(p)

    p = sub.add_parser("loss", help="focal + dice loss per image")
    _add_eval_inputs(p)
    p.add_argument("--alpha", type=float, default=0.5, help="focal weighting factor (default: 0.5)")
    p.add_argument("--gamma", type=float, default=3.33, help="focal down-weighting exponent (default: 3.33)")
    p.add_argument("--beta", type=float, default=1.0, help="dice F-measure beta (default: 1)")
    p.add_argument("--out", type=Path, help="write the CSV here instead of stdout")
    _add_common_flags(p)

    return parser


def _load_pairs(args: argparse.Namespace) -> list[tuple[str, ProbabilityMap, BinaryMask]]:
    manifest = load_manifest(args.gt_manifest)

    def one(entry) -> tuple[str, ProbabilityMap, BinaryMask]:
        mask_path = manifest.mask_file(entry)
        if mask_path is None:
            raise ValueError(f"entry {entry.id!r} has no ground-truth mask")
        pred_path = Path(args.pred_dir) / f"{entry.id}.png"
        if not pred_path.is_file():
            raise FileNotFoundError(f"no prediction for id {entry.id!r}: {pred_path}")
        return entry.id, read_probability_map(pred_path), read_mask(mask_path, args.invert_masks)

    return map_ordered(one, manifest.entries, args.jobs)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_features(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    table = features_for(manifest, _provider_from_args(args), args.jobs)
    write_feature_table(table, args.out)
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    table = features_for(manifest, _provider_from_args(args), args.jobs)
    coords = pca_project(table, args.components)
    distances = distances_from_mean(coords)
    bins = build_bins(distances, args.n_bins)
    quotas = selection_quotas(bins, len(manifest), args.s)
    split = select_true_images(bins, quotas)
    write_manifest(apply_split(manifest, split), args.out)
    coords_out = args.coords_out or args.out.with_name(args.out.stem + "_coords.csv")
    emit_coordinates(coords, bins, coords_out)
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    write_manifest(apply_split(manifest, allset_split(manifest, args.ratio)), args.out)
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.trueset)
    train = tuple(e.id for e in manifest.entries if e.split == "train")
    val = tuple(e.id for e in manifest.entries if e.split == "val")
    seed = args.seed if args.seed is not None else _default_seed()
    overrides = dict(scale=args.scale, t0=args.t0, t1=args.t1, t2=args.t2)
    if args.kernels is not None:
        spec = AugmentSpec(
            mode=args.mode,
            kernels=tuple(int(k) for k in str(args.kernels).split(",")),
            seed=seed,
            **overrides,
        )
    else:
        spec = AugmentSpec.for_mode(args.mode, seed=seed, **overrides)
    out_manifest = build_augmented_manifest(
        TrueSplit(train, val), spec, manifest, args.out_dir,
        invert_masks=args.invert_masks, jobs=args.jobs,
    )
    write_manifest(out_manifest, args.out or Path(args.out_dir) / "manifest.tsv")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    triples = _load_pairs(args)
    pairs = [(pm, gt) for _, pm, gt in triples]
    if args.grid:
        _, report = evalmod.grid_search_threshold(pairs)
    else:
        report = evalmod.evaluate_set(pairs, args.threshold)
    name = args.dataset_name or Path(args.gt_manifest).stem
    _emit(evalmod.format_metrics_csv([(name, report)]), args.out)
    return 0


def cmd_curves(args: argparse.Namespace) -> int:
    triples = _load_pairs(args)
    rows = evalmod.curve_points([(pm, gt) for _, pm, gt in triples], args.curve)
    evalmod.write_curve_csv(rows, args.curve, args.out)
    return 0


def cmd_loss(args: argparse.Namespace) -> int:
    params = evalmod.LossParams(alpha=args.alpha, gamma=args.gamma, beta=args.beta)
    triples = _load_pairs(args)
    lines = ["id,focal,dice,total"]
    for image_id, pmap, gt in triples:
        focal, dice, total = evalmod.focal_dice_loss(gt, pmap, params)
        lines.append(f"{image_id},{repr(focal)},{repr(dice)},{repr(total)}")
    _emit("".join(line + "\n" for line in lines), args.out)
    return 0


_COMMANDS = {
    "features": cmd_features,
    "select": cmd_select,
    "split": cmd_split,
    "augment": cmd_augment,
    "evaluate": cmd_evaluate,
    "curves": cmd_curves,
    "loss": cmd_loss,
}


def run(argv: list[str]) -> int:
    """Parse argv and execute; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:
        print(f"trueset {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
