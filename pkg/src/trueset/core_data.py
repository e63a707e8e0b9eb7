"""Dataset manifests, mask / probability-map PNG I/O, and the feature-table binary format.

File formats
------------
Manifest: UTF-8 text, one entry per line::

    id<TAB>image_path<TAB>mask_path_or_-<TAB>split

``#`` comment lines and blank lines are ignored. Paths are relative to the
manifest's root directory (by default, the directory containing the file).

Feature table (``.tdf``): magic ``TDF1`` (4 bytes), little-endian u32 count
``n``, little-endian u32 dimension ``d``, then ``n`` records of
[little-endian u16 id byte-length, id UTF-8 bytes, ``d`` little-endian
IEEE-754 f32 values]. Round trips are bit-exact.

Masks are 8-bit PNGs; a pixel is foreground iff its value (grayscale, or
BT.601 luma for RGB) exceeds 127. Probability maps are 8-bit grayscale PNGs
read as value/255.
"""

from __future__ import annotations

import os
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np
from PIL import Image

SPLITS = ("train", "val", "test", "unassigned")
FEATURE_MAGIC = b"TDF1"
_ID_RE = re.compile(r"[A-Za-z0-9._-]+\Z")
_LUMA = np.array([0.299, 0.587, 0.114])


class ManifestError(ValueError):
    """Malformed manifest file or violated manifest invariant."""


class FeatureTableError(ValueError):
    """Malformed feature-table file or violated table invariant."""


# ---------------------------------------------------------------------------
# manifests


@dataclass
class ManifestEntry:
    """One dataset record: image id, image path, optional mask path, split tag."""

    id: str
    image_path: str
    mask_path: Optional[str] = None
    split: str = "unassigned"

    def __post_init__(self) -> None:
        if not _ID_RE.fullmatch(self.id or ""):
            raise ManifestError(f"invalid id {self.id!r}: must match [A-Za-z0-9._-]+")
        if self.split not in SPLITS:
            raise ManifestError(f"invalid split {self.split!r} for id {self.id!r}")


@dataclass
class DatasetManifest:
    """Ordered list of entries plus the root directory their paths resolve against."""

    entries: list[ManifestEntry]
    root: Path

    def __post_init__(self) -> None:
        self.root = Path(self.root)
        seen: set[str] = set()
        for e in self.entries:
            if e.id in seen:
                raise ManifestError(f"duplicate id {e.id!r}")
            seen.add(e.id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def entry(self, image_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.id == image_id:
                return e
        raise KeyError(image_id)

    def image_file(self, entry: ManifestEntry) -> Path:
        return Path(os.path.normpath(self.root / entry.image_path))

    def mask_file(self, entry: ManifestEntry) -> Optional[Path]:
        if entry.mask_path is None:
            return None
        return Path(os.path.normpath(self.root / entry.mask_path))


def load_manifest(path: str | Path, root: str | Path | None = None) -> DatasetManifest:
    """Parse a manifest file; entry order is preserved from the file.

    `root` defaults to the directory containing the file and must exist.
    """
    path = Path(path)
    base = Path(root) if root is not None else path.parent
    if not base.is_dir():
        raise FileNotFoundError(f"manifest root does not exist: {base}")
    entries: list[ManifestEntry] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ManifestError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}"
                )
            image_id, image_path, mask_path, split = parts
            try:
                entries.append(
                    ManifestEntry(
                        id=image_id,
                        image_path=image_path,
                        mask_path=None if mask_path == "-" else mask_path,
                        split=split,
                    )
                )
            except ManifestError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from None
    return DatasetManifest(entries, base)


def validate_rasters(manifest: DatasetManifest) -> None:
    """Check that every referenced image exists and each mask matches its image's size.

    Separate from `load_manifest` so pure id/path manipulation never requires
    the rasters to be present; pipelines that are about to read pixels call
    this first to fail early with the offending id.
    """
    for e in manifest.entries:
        image_path = manifest.image_file(e)
        if not image_path.is_file():
            raise ManifestError(f"id {e.id!r}: image file missing: {image_path}")
        with Image.open(image_path) as img:
            image_size = img.size
        mask_path = manifest.mask_file(e)
        if mask_path is None:
            continue
        if not mask_path.is_file():
            raise ManifestError(f"id {e.id!r}: mask file missing: {mask_path}")
        with Image.open(mask_path) as img:
            if img.size != image_size:
                raise ManifestError(
                    f"id {e.id!r}: mask size {img.size} differs from image size {image_size}"
                )


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Serialize a manifest; paths are rewritten relative to the output file's directory."""
    path = Path(path)
    base = path.parent if str(path.parent) else Path(".")

    def rel(p: str) -> str:
        resolved = os.path.normpath(manifest.root / p)
        return os.path.relpath(resolved, base)

    lines = []
    for e in manifest.entries:
        mask = rel(e.mask_path) if e.mask_path is not None else "-"
        lines.append(f"{e.id}\t{rel(e.image_path)}\t{mask}\t{e.split}")
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


# ---------------------------------------------------------------------------
# rasters


@dataclass
class BinaryMask:
    """2-D raster of {0,1} labels, shape (height, width)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"mask must be a non-empty 2-D raster, got shape {arr.shape}")
        if not ((arr == 0) | (arr == 1)).all():
            raise ValueError("mask values must all be 0 or 1")
        self.data = arr.astype(np.uint8, copy=False)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass
class ProbabilityMap:
    """2-D raster of [0,1] reals, shape (height, width)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"map must be a non-empty 2-D raster, got shape {arr.shape}")
        if not np.isfinite(arr).all() or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("probability values must lie within [0, 1]")
        self.data = arr

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def read_grayscale(path: str | Path) -> np.ndarray:
    """Decode a PNG to an 8-bit grayscale array.

    Grayscale files pass through; RGB(A)/palette files are reduced with BT.601
    luma, round(0.299 R + 0.587 G + 0.114 B), halves away from zero.
    """
    with Image.open(path) as img:
        mode = img.mode
        if mode == "L":
            arr = np.asarray(img, dtype=np.uint8)
        elif mode in ("1", "LA", "I;16", "I"):
            arr = np.asarray(img.convert("L"), dtype=np.uint8)
        elif mode in ("RGB", "RGBA", "P"):
            rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
            arr = np.floor(rgb @ _LUMA + 0.5).astype(np.uint8)
        else:
            raise ValueError(f"unsupported image mode {mode!r}: {path}")
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"zero-dimension image: {path}")
    return arr


def read_mask(path: str | Path, invert: bool = False) -> BinaryMask:
    """Read a ground-truth mask PNG; pixel value > 127 maps to 1.

    `invert` flips the polarity for datasets that encode foreground as dark.
    """
    gray = read_grayscale(path)
    mask = (gray > 127).astype(np.uint8)
    if invert:
        mask = 1 - mask
    return BinaryMask(mask)


def write_mask(mask: BinaryMask, path: str | Path) -> None:
    """Write a mask as an 8-bit grayscale PNG with 1 -> 255, 0 -> 0."""
    Image.fromarray(mask.data * np.uint8(255), mode="L").save(path, format="PNG")


def read_probability_map(path: str | Path) -> ProbabilityMap:
    """Read an 8-bit grayscale PNG as a probability map, value v -> v/255."""
    gray = read_grayscale(path)
    return ProbabilityMap(gray.astype(np.float64) / 255.0)


def write_probability_map(pmap: ProbabilityMap, path: str | Path) -> None:
    """Quantize a probability map to an 8-bit grayscale PNG (v -> round(v*255))."""
    q = np.floor(pmap.data * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(q, mode="L").save(path, format="PNG")


# ---------------------------------------------------------------------------
# feature tables


@dataclass
class FeatureTable:
    """Id-indexed matrix of per-image feature vectors (float32 rows)."""

    ids: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        self.ids = tuple(self.ids)
        arr = np.asarray(self.vectors, dtype=np.float32)
        if arr.ndim != 2:
            raise FeatureTableError(f"vectors must be 2-D, got shape {arr.shape}")
        if len(self.ids) != arr.shape[0]:
            raise FeatureTableError(
                f"{len(self.ids)} ids but {arr.shape[0]} vector rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise FeatureTableError("ids must be unique")
        if arr.size and not np.isfinite(arr).all():
            raise FeatureTableError("vectors must be finite")
        self.vectors = arr

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def reordered(self, ids: Sequence[str]) -> "FeatureTable":
        """Rows selected and reordered by `ids`; raises naming any missing id."""
        index = {i: k for k, i in enumerate(self.ids)}
        missing = [i for i in ids if i not in index]
        if missing:
            raise FeatureTableError(f"feature table has no vector for id {missing[0]!r}")
        rows = np.array([index[i] for i in ids], dtype=np.intp)
        return FeatureTable(tuple(ids), self.vectors[rows])


def write_feature_table(table: FeatureTable, path: str | Path) -> None:
    """Write the binary feature-table format (see module docstring)."""
    chunks = [FEATURE_MAGIC, struct.pack("<II", len(table.ids), table.dim)]
    vectors = np.ascontiguousarray(table.vectors, dtype="<f4")
    for i, image_id in enumerate(table.ids):
        encoded = image_id.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise FeatureTableError(f"id longer than 65535 bytes: {image_id[:32]!r}...")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(vectors[i].tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_feature_table(path: str | Path) -> FeatureTable:
    """Read the binary feature-table format; round trip with write is bit-exact."""
    buf = Path(path).read_bytes()
    if len(buf) < 4 or buf[:4] != FEATURE_MAGIC:
        raise FeatureTableError(f"bad magic in {path}: expected {FEATURE_MAGIC!r}")
    if len(buf) < 12:
        raise FeatureTableError(f"truncated file: {path}")
    n, d = struct.unpack_from("<II", buf, 4)
    offset = 12
    ids: list[str] = []
    rows: list[np.ndarray] = []
    for _ in range(n):
        if offset + 2 > len(buf):
            raise FeatureTableError(f"truncated file: {path}")
        (id_len,) = struct.unpack_from("<H", buf, offset)
        offset += 2
        if offset + id_len + 4 * d > len(buf):
            raise FeatureTableError(f"truncated file: {path}")
        ids.append(buf[offset : offset + id_len].decode("utf-8"))
        offset += id_len
        rows.append(np.frombuffer(buf, dtype="<f4", count=d, offset=offset).copy())
        offset += 4 * d
    if offset != len(buf):
        raise FeatureTableError(f"trailing bytes after table payload: {path}")
    vectors = np.vstack(rows) if rows else np.zeros((0, d), dtype=np.float32)
    return FeatureTable(tuple(ids), vectors)
