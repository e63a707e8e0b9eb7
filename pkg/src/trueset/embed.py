"""Per-image feature vectors for selection.

Two providers: `file` ingests an externally computed feature table (for
example, flattened outputs of a pretrained convolutional encoder, transported
in the binary table format), `builtin` computes a cheap deterministic
descriptor directly from the images so the pipeline is self-contained.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core_data import (
    DatasetManifest,
    FeatureTable,
    ManifestEntry,
    read_feature_table,
    read_grayscale,
)
from .util import map_ordered

DEFAULT_GRID = 16
DEFAULT_HIST_BINS = 8


@dataclass(frozen=True)
class FeatureProvider:
    """Source of per-image feature vectors: a table file or the builtin descriptor."""

    kind: str
    path: Optional[Path] = None
    grid: int = DEFAULT_GRID
    bins: int = DEFAULT_HIST_BINS

    def __post_init__(self) -> None:
        if self.kind not in ("file", "builtin"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "file" and self.path is None:
            raise ValueError("file provider requires a table path")
        if self.grid < 1 or self.bins < 1:
            raise ValueError("grid and bins must be positive")

    @staticmethod
    def from_file(path: str | Path) -> "FeatureProvider":
        return FeatureProvider("file", Path(path))

    @staticmethod
    def builtin(grid: int = DEFAULT_GRID, bins: int = DEFAULT_HIST_BINS) -> "FeatureProvider":
        return FeatureProvider("builtin", None, grid, bins)


def builtin_descriptor(
    gray: np.ndarray, grid: int = DEFAULT_GRID, bins: int = DEFAULT_HIST_BINS
) -> np.ndarray:
    """Coarse appearance descriptor: grid of mean intensities + gradient histogram.

    The first grid*grid values are per-cell means of intensities scaled to
    [0, 1] over a grid x grid partition (row-major; cells emptied by tiny
    images contribute 0). The last `bins` values histogram gradient
    magnitudes (central differences, one-sided at borders), normalized by the
    per-image maximum, into equal buckets on [0, 1] and divided by the pixel
    count; an image with zero gradient everywhere gets the zero histogram.
    Total length grid*grid + bins (264 with defaults).
    """
    img = np.asarray(gray, dtype=np.float64) / 255.0
    h, w = img.shape
    cells = np.zeros(grid * grid, dtype=np.float64)
    row_edges = [(i * h) // grid for i in range(grid + 1)]
    col_edges = [(j * w) // grid for j in range(grid + 1)]
    for i in range(grid):
        for j in range(grid):
            block = img[row_edges[i] : row_edges[i + 1], col_edges[j] : col_edges[j + 1]]
            if block.size:
                cells[i * grid + j] = block.mean()
    gy = np.gradient(img, axis=0) if h >= 2 else np.zeros_like(img)
    gx = np.gradient(img, axis=1) if w >= 2 else np.zeros_like(img)
    magnitude = np.hypot(gy, gx)
    peak = float(magnitude.max())
    if peak > 0.0:
        hist, _ = np.histogram(magnitude / peak, bins=bins, range=(0.0, 1.0))
        hist = hist.astype(np.float64) / magnitude.size
    else:
        hist = np.zeros(bins, dtype=np.float64)
    return np.concatenate([cells, hist]).astype(np.float32)


def features_for(
    manifest: DatasetManifest, provider: FeatureProvider, jobs: int = 1
) -> FeatureTable:
    """One feature vector per manifest entry, in manifest order.

    The file provider copies vectors verbatim (reordered to the manifest);
    the builtin provider computes descriptors from the images, optionally in
    parallel; output is independent of thread count.
    """
    ids = manifest.ids()
    if provider.kind == "file":
        return read_feature_table(provider.path).reordered(ids)

    def one(entry: ManifestEntry) -> np.ndarray:
        return builtin_descriptor(
            read_grayscale(manifest.image_file(entry)), provider.grid, provider.bins
        )

    rows = map_ordered(one, manifest.entries, jobs)
    dim = provider.grid * provider.grid + provider.bins
    vectors = np.vstack(rows) if rows else np.zeros((0, dim), dtype=np.float32)
    return FeatureTable(tuple(ids), vectors)
