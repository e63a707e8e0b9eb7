"""Distribution-representative subset selection.

The pipeline is a pure function of the feature table: project every image
onto the leading principal directions, histogram the absolute deviation of
the first coordinate from its mean into equal-width bins, assign per-bin
pick quotas that decay along descending bin occupancy, then draw evenly
spaced train/validation picks from each bin. A plain 90-10 split over the
whole dataset is provided alongside for baselines.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .core_data import DatasetManifest, FeatureTable
from .util import round_half_away

QUOTA_EPS = 1e-9  # absorbs float drift in the repeated s -= dec decrements


class DegenerateVarianceError(ValueError):
    """All feature vectors are identical; principal directions are undefined."""


@dataclass(frozen=True)
class CoordinateMap:
    """Per-image projections onto the top principal directions (k = 1 or 2)."""

    ids: tuple[str, ...]
    components: np.ndarray  # (n, k) float64

    def __post_init__(self) -> None:
        if self.components.ndim != 2 or len(self.ids) != self.components.shape[0]:
            raise ValueError("ids and component rows must correspond")
        if not np.isfinite(self.components).all():
            raise ValueError("coordinates must be finite")

    @property
    def first_coordinates(self) -> np.ndarray:
        return self.components[:, 0]


def principal_axes(vectors: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-k principal directions of the rows of `vectors`.

    Returns (axes, eigenvalues, mean): axes is (k, dim) with unit-norm rows,
    eigenvalues belong to the sample covariance (descending order), and each
    axis' sign is fixed so its largest-magnitude loading is positive.
    Eigenvectors come from the n x n Gram matrix of the centered rows, since
    n is typically far smaller than dim. Rank-deficient trailing directions
    come back as zero rows with eigenvalue 0.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a 2-D array with at least 2 rows")
    if not 1 <= k <= 2:
        raise ValueError(f"k must be 1 or 2, got {k}")
    if not np.isfinite(x).all():
        raise ValueError("non-finite feature values")
    mean = x.mean(axis=0)
    centered = x - mean
    total = float((centered**2).sum())
    if total <= 0.0:
        raise DegenerateVarianceError("zero total variance: all vectors are identical")
    gram = centered @ centered.T
    eigvals, eigvecs = np.linalg.eigh(gram)  # ascending
    axes = np.zeros((k, x.shape[1]), dtype=np.float64)
    cov_eigvals = np.zeros(k, dtype=np.float64)
    for j in range(k):
        lam = float(eigvals[-1 - j])
        direction = centered.T @ eigvecs[:, -1 - j]
        norm = float(np.linalg.norm(direction))
        if lam <= 0.0 or norm <= 1e-12 * np.sqrt(total):
            continue  # no variance left along this direction
        direction /= norm
        pivot = int(np.argmax(np.abs(direction)))
        if direction[pivot] < 0:
            direction = -direction
        axes[j] = direction
        cov_eigvals[j] = lam / (x.shape[0] - 1)
    return axes, cov_eigvals, mean


def pca_project(table: FeatureTable, k: int = 1) -> CoordinateMap:
    """Project the table's vectors onto the top-k principal directions."""
    axes, _, mean = principal_axes(table.vectors, k)
    coords = (np.asarray(table.vectors, dtype=np.float64) - mean) @ axes.T
    return CoordinateMap(tuple(table.ids), coords)


def distances_from_mean(coords: CoordinateMap) -> dict[str, float]:
    """Absolute deviation of each first coordinate from the mean coordinate."""
    values = coords.first_coordinates
    if values.size == 0:
        raise ValueError("empty coordinate map")
    avg = float(values.mean())
    return {i: abs(float(v) - avg) for i, v in zip(coords.ids, values)}


@dataclass(frozen=True)
class BinStructure:
    """Equal-width histogram over distances, with per-bin membership.

    Bins are [edges[b], edges[b+1]) except the last, which is closed. When
    all distances coincide everything lands in bin 0 and the edges span
    [min, min+1]. `idx_descending` orders bin indices by occupancy
    (descending, ties by ascending index); `members` lists each bin's ids
    sorted by ascending distance, ties by id.
    """

    edges: np.ndarray
    counts: np.ndarray
    bin_of: dict[str, int]
    idx_descending: tuple[int, ...]
    members: tuple[tuple[str, ...], ...]

    @property
    def n_bins(self) -> int:
        return len(self.counts)


def build_bins(distances: Mapping[str, float], n_bins: int) -> BinStructure:
    """Histogram distances into `n_bins` equal-width bins."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if not distances:
        raise ValueError("empty distances")
    ids = list(distances)
    values = np.array([distances[i] for i in ids], dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        edges = np.linspace(lo, hi, n_bins + 1)
        assigned = np.searchsorted(edges, values, side="right") - 1
        np.clip(assigned, 0, n_bins - 1, out=assigned)
    else:
        edges = np.linspace(lo, lo + 1.0, n_bins + 1)
        assigned = np.zeros(len(ids), dtype=np.intp)
    counts = np.bincount(assigned, minlength=n_bins)
    idx_descending = tuple(sorted(range(n_bins), key=lambda b: (-int(counts[b]), b)))
    members = []
    for b in range(n_bins):
        bin_ids = [ids[i] for i in np.flatnonzero(assigned == b)]
        bin_ids.sort(key=lambda i: (distances[i], i))
        members.append(tuple(bin_ids))
    bin_of = {ids[i]: int(assigned[i]) for i in range(len(ids))}
    return BinStructure(edges, counts, bin_of, idx_descending, tuple(members))


@dataclass(frozen=True)
class SelectionQuotas:
    """Per-bin pick counts plus the decay parameters that produced them."""

    select_mapping: dict[int, int]
    s: float
    dec: float
    n_bins: int


def selection_quotas(bins: BinStructure, num_images: int, s0: float = 0.5) -> SelectionQuotas:
    """Assign per-bin quotas along descending occupancy with a decaying parameter.

    Visiting bins in `idx_descending` order: while s is still positive the
    bin receives round(num_images * s / (n_bins - 1)) picks (halves away from
    zero, computed before the decrement), then s decreases by s0/(n_bins-1).
    Bins reached after s has decayed to zero get quota 0.
    """
    if num_images < 1:
        raise ValueError("num_images must be >= 1")
    if not 0.0 <= s0 <= 1.0:
        raise ValueError("s0 must lie in [0, 1]")
    n_bins = bins.n_bins
    if n_bins < 2:
        raise ValueError("quota recurrence needs at least 2 bins")
    dec = s0 / (n_bins - 1)
    mapping = {b: 0 for b in range(n_bins)}
    s = s0
    select = round_half_away(num_images * s / (n_bins - 1))
    for b in bins.idx_descending:
        if s > QUOTA_EPS:
            mapping[b] = select
            s -= dec
            select = round_half_away(num_images * s / (n_bins - 1))
    return SelectionQuotas(mapping, s0, dec, n_bins)


@dataclass(frozen=True)
class TrueSplit:
    """Disjoint ordered train/validation id lists."""

    train_ids: tuple[str, ...]
    val_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if set(self.train_ids) & set(self.val_ids):
            raise ValueError("train and val ids overlap")


def _spread_picks(n_slots: int, n_picks: int, jump: float) -> list[int]:
    """Evenly spaced slot indices round(z*jump + jump/2), z = 0..n_picks-1.

    Indices are clamped to the valid range; a collision advances to the next
    unused slot (wrapping), so exactly n_picks distinct indices come back
    whenever n_picks <= n_slots.
    """
    used: set[int] = set()
    picks: list[int] = []
    for z in range(n_picks):
        idx = round_half_away(z * jump + jump / 2.0)
        idx = min(max(idx, 0), n_slots - 1)
        while idx in used:
            idx += 1
            if idx >= n_slots:
                idx = 0
        used.add(idx)
        picks.append(idx)
    return picks


def select_true_images(bins: BinStructure, quotas: SelectionQuotas) -> TrueSplit:
    """Draw the final train/validation ids from each bin.

    Per bin: total = min(quota, occupancy); n_train = round(total * 0.90),
    n_val = total - n_train. Validation picks are spread over the whole bin
    with jump = round(occupancy / n_val); all picks are removed before the
    train picks, which use jump = round(remaining / n_train): a jump of 1
    takes the first n_train remaining ids, a larger jump spreads them.
    Output preserves bin order, then intra-bin (distance, id) order.
    """
    train: list[str] = []
    val: list[str] = []
    for b in range(bins.n_bins):
        members = bins.members[b]
        if not members:
            continue
        quota = quotas.select_mapping.get(b, 0)
        total = min(quota, len(members))
        if total <= 0:
            continue
        n_train = round_half_away(total * 0.90)
        n_val = total - n_train
        val_picks: list[int] = []
        if n_val > 0:
            jump = round_half_away(len(members) / n_val)
            val_picks = _spread_picks(len(members), n_val, float(jump))
        removed = set(val_picks)
        cleaned = [m for i, m in enumerate(members) if i not in removed]
        val.extend(members[i] for i in sorted(val_picks))
        if n_train > 0:
            jump = round_half_away(len(cleaned) / n_train)
            if jump <= 1:
                train.extend(cleaned[:n_train])
            else:
                picks = _spread_picks(len(cleaned), n_train, float(jump))
                train.extend(cleaned[i] for i in sorted(picks))
    return TrueSplit(tuple(train), tuple(val))


def allset_split(manifest: DatasetManifest, ratio: float = 0.90) -> TrueSplit:
    """Split all manifest ids into train/val by evenly spaced validation picks.

    Ids are sorted; n_val = n - round(n * ratio) and validation indices are
    round(z * (n / n_val) + (n / n_val) / 2). Small datasets where the
    rounding leaves n_val = 0 come back as all-train.
    """
    ids = sorted(e.id for e in manifest.entries)
    n = len(ids)
    if n == 0:
        raise ValueError("empty manifest")
    if n < 2:
        raise ValueError("need at least 2 entries to split")
    n_val = n - round_half_away(n * ratio)
    if n_val <= 0:
        return TrueSplit(tuple(ids), ())
    picks = set(_spread_picks(n, n_val, n / n_val))
    train = tuple(ids[i] for i in range(n) if i not in picks)
    val = tuple(ids[i] for i in sorted(picks))
    return TrueSplit(train, val)


def apply_split(manifest: DatasetManifest, split: TrueSplit) -> DatasetManifest:
    """New manifest containing only the split's entries, tagged train/val."""
    by_id = {e.id: e for e in manifest.entries}
    entries = [replace(by_id[i], split="train") for i in split.train_ids]
    entries += [replace(by_id[i], split="val") for i in split.val_ids]
    return DatasetManifest(entries, manifest.root)


def emit_coordinates(coords: CoordinateMap, bins: BinStructure, path: str | Path) -> None:
    """Write the per-image coordinate CSV `id,c1[,c2],distance,bin`.

    Floats use shortest round-trip formatting, so re-parsing the file
    reproduces the in-memory values exactly.
    """
    distances = distances_from_mean(coords)
    k = coords.components.shape[1]
    header = ["id", "c1"] + (["c2"] if k == 2 else []) + ["distance", "bin"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row_idx, image_id in enumerate(coords.ids):
            row = [image_id]
            row += [repr(float(coords.components[row_idx, j])) for j in range(k)]
            row.append(repr(distances[image_id]))
            row.append(str(bins.bin_of[image_id]))
            writer.writerow(row)
