"""Knowledge-based ground-truth augmentation for crack-like masks.

Four generators over a binary mask:

* stochastic width (`sw`): dilate with several square kernels, widening the
  annotation;
* stochastic length (`sl`): delete random squares inside large connected
  components, shortening the apparent crack;
* stochastic scale space (`ss`): dilate at an upscaled resolution and
  resample back, realizing fractional-width dilation;
* `mix`: two dilations plus one random masking per input.

Width and scale-space outputs are supersets of the input; random masking
only removes pixels and never touches components of area <= t0. Randomness
is injected through a per-image generator seeded from (global seed, id), so
results are identical under any processing order or thread count.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .core_data import BinaryMask, DatasetManifest, ManifestEntry, read_mask, write_mask
from .imageops import (
    ConnectedComponent,
    DegeneratePolygonError,
    Kernel,
    Polygon,
    connected_components,
    convex_hull,
    dilate,
    point_in_polygon,
    resize,
)
from .select import TrueSplit
from .util import map_ordered, per_image_seed, round_half_away

MODES = ("sw", "sl", "ss", "mix")
DEFAULT_KERNELS = (3, 5, 8)
MIX_KERNELS = (3, 5)
MAX_POINT_TRIALS = 1000


class Rng(Protocol):
    """Deterministic random source; numpy Generators satisfy this."""

    def integers(self, low: int, high: int) -> int:  # half-open, numpy-style
        ...

    def uniform(self, low: float, high: float) -> float:
        ...


@dataclass(frozen=True)
class AugmentSpec:
    """Parameters of one augmentation run."""

    mode: str
    kernels: tuple[int, ...] = DEFAULT_KERNELS
    scale: int = 4
    t0: int = 50
    t1: int = 100
    t2: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if len(self.kernels) < 1 or any(k < 1 for k in self.kernels):
            raise ValueError("kernels must be a non-empty list of positive sizes")
        if self.scale < 2:
            raise ValueError("scale must be >= 2")
        if not self.t0 < self.t1 < self.t2:
            raise ValueError("area thresholds must satisfy t0 < t1 < t2")

    @staticmethod
    def for_mode(mode: str, seed: int = 0, **overrides) -> "AugmentSpec":
        """Spec with the mode's default kernels ((3,5,8); mix uses (3,5))."""
        kernels = MIX_KERNELS if mode == "mix" else DEFAULT_KERNELS
        return AugmentSpec(mode=mode, kernels=kernels, seed=seed, **overrides)

    def variants(self) -> int:
        if self.mode == "sl":
            return 1
        if self.mode == "mix":
            return len(self.kernels) + 1
        return len(self.kernels)


def image_rng(spec: AugmentSpec, image_id: str) -> np.random.Generator:
    """Per-image generator derived from the spec's global seed and the id."""
    return np.random.Generator(np.random.PCG64(per_image_seed(spec.seed, image_id)))


def stochastic_width(mask: BinaryMask, kernels: Sequence[int] = DEFAULT_KERNELS) -> list[BinaryMask]:
    """One dilated mask per kernel size, in kernel order."""
    return [dilate(mask, Kernel(k)) for k in kernels]


def _side_range(component: ConnectedComponent) -> tuple[int, int]:
    # estimated crack width: area over the longer bbox side; the cut square
    # must span at least that width to actually sever the crack
    min_row, min_col, max_row, max_col = component.bbox
    extent = max(max_row - min_row + 1, max_col - min_col + 1)
    width_estimate = component.area / extent
    low = max(3, round_half_away(width_estimate))
    high = max(5, round_half_away(3.0 * width_estimate))
    return low, high


def _npts_for_area(area: int, spec: AugmentSpec, rng: Rng) -> int:
    if area <= spec.t1:
        return int(rng.integers(1, 4))
    if area <= spec.t2:
        return int(rng.integers(2, 6))
    return int(rng.integers(5, 9))


def _sample_point(
    component: ConnectedComponent, polygon: Polygon | None, rng: Rng
) -> tuple[float, float]:
    """Uniform point inside the component's polygon (bbox when degenerate).

    Rejection-samples the bbox; after MAX_POINT_TRIALS misses, falls back to
    a uniformly chosen component pixel so termination is guaranteed.
    """
    min_row, min_col, max_row, max_col = component.bbox
    for _ in range(MAX_POINT_TRIALS):
        r = float(rng.uniform(min_row, max_row))
        c = float(rng.uniform(min_col, max_col))
        if polygon is None or point_in_polygon((r, c), polygon):
            return r, c
    pixel = component.pixels[int(rng.integers(0, component.area))]
    return float(pixel[0]), float(pixel[1])


def random_masking(mask: BinaryMask, spec: AugmentSpec, rng: Rng) -> BinaryMask:
    """Cut random squares out of every large component (the length augmentation).

    Components of area <= t0 are left untouched. Larger ones lose npts
    squares (npts grows with area) whose side is drawn from the
    width-proportional range and whose centers are sampled inside the
    component's convex hull. Each square removes only the pixels of the
    component being processed, so small neighbors are never collateral
    damage and the output is always a subset of the input.
    """
    out = mask.data.copy()
    height, width = out.shape
    for component in connected_components(mask):
        if component.area <= spec.t0:
            continue
        side_low, side_high = _side_range(component)
        try:
            polygon: Polygon | None = convex_hull(component)
        except DegeneratePolygonError:
            polygon = None  # thin or tiny: treat the bbox itself as the region
        npts = _npts_for_area(component.area, spec, rng)
        rows = np.array([p[0] for p in component.pixels])
        cols = np.array([p[1] for p in component.pixels])
        owned = np.zeros_like(out, dtype=bool)
        owned[rows, cols] = True
        for _ in range(npts):
            point = _sample_point(component, polygon, rng)
            side = int(rng.integers(side_low, side_high + 1))
            center_r = round_half_away(point[0])
            center_c = round_half_away(point[1])
            r0 = max(center_r - side // 2, 0)
            c0 = max(center_c - side // 2, 0)
            r1 = min(center_r - side // 2 + side, height)
            c1 = min(center_c - side // 2 + side, width)
            if r0 < r1 and c0 < c1:
                region = out[r0:r1, c0:c1]
                region[owned[r0:r1, c0:c1]] = 0
    return BinaryMask(out)


def scale_space(mask: BinaryMask, spec: AugmentSpec) -> list[BinaryMask]:
    """Dilate at `scale`-times resolution and resample back (fractional dilation).

    The mask is upscaled bicubically on the 0/255 domain, re-binarized at
    >= 128, dilated with each kernel, then brought back to the original size
    with nearest-neighbor sampling. Kernel k at scale s acts like a k/s
    dilation at the original resolution.
    """
    h, w = mask.data.shape
    up = resize(mask.data.astype(np.float64) * 255.0, w * spec.scale, h * spec.scale, "bicubic")
    up_mask = BinaryMask((up >= 128.0).astype(np.uint8))
    outputs = []
    for k in spec.kernels:
        dilated = dilate(up_mask, Kernel(k))
        down = resize(dilated.data, w, h, "nearest")
        outputs.append(BinaryMask(down))
    return outputs


def mix(mask: BinaryMask, spec: AugmentSpec, rng: Rng) -> list[BinaryMask]:
    """Width + length combination: dilations with the spec's kernels, then one random masking."""
    variants = [dilate(mask, Kernel(k)) for k in spec.kernels]
    variants.append(random_masking(mask, spec, rng))
    return variants


def augment_mask(mask: BinaryMask, spec: AugmentSpec, image_id: str) -> list[BinaryMask]:
    """All variants of one mask under the spec, seeded per image id."""
    if spec.mode == "sw":
        return stochastic_width(mask, spec.kernels)
    if spec.mode == "ss":
        return scale_space(mask, spec)
    rng = image_rng(spec, image_id)
    if spec.mode == "sl":
        return [random_masking(mask, spec, rng)]
    return mix(mask, spec, rng)


def build_augmented_manifest(
    split: TrueSplit,
    spec: AugmentSpec,
    manifest: DatasetManifest,
    out_dir: str | Path,
    invert_masks: bool = False,
    jobs: int = 1,
) -> DatasetManifest:
    """Write augmented masks for the train ids and assemble the new manifest.

    Each train entry contributes the original plus its variants (named
    `<id>__<mode><i>.png`, paired with the original image); validation
    entries are copied untouched. Train output count is exactly
    |train| * (1 + variants).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_id = {e.id: e for e in manifest.entries}
    missing = [i for i in (*split.train_ids, *split.val_ids) if i not in by_id]
    if missing:
        raise KeyError(f"split id {missing[0]!r} not present in the manifest")

    def augment_one(image_id: str) -> list[ManifestEntry]:
        entry = by_id[image_id]
        mask_path = manifest.mask_file(entry)
        if mask_path is None:
            raise ValueError(f"entry {image_id!r} has no mask to augment")
        mask = read_mask(mask_path, invert=invert_masks)
        entries = [replace(entry, split="train")]
        for i, variant in enumerate(augment_mask(mask, spec, image_id)):
            variant_id = f"{image_id}__{spec.mode}{i}"
            if variant_id in by_id:
                raise ValueError(f"augmented id collides with an existing entry: {variant_id!r}")
            out_png = out_dir / f"{variant_id}.png"
            write_mask(variant, out_png)
            entries.append(
                ManifestEntry(
                    id=variant_id,
                    image_path=entry.image_path,
                    mask_path=os.path.relpath(out_png, manifest.root),
                    split="train",
                )
            )
        return entries

    groups = map_ordered(augment_one, split.train_ids, jobs)
    entries = [e for group in groups for e in group]
    entries += [replace(by_id[i], split="val") for i in split.val_ids]
    return DatasetManifest(entries, manifest.root)
