"""Raster primitives for mask processing: dilation, connected components,
convex hulls, point-in-polygon tests, and resizing.

Conventions pinned here so results are reproducible across platforms:

* structuring elements are square and all-ones, anchored at (k//2, k//2);
  an even kernel therefore grows a pixel k//2 steps backward and k-1-k//2
  steps forward along each axis,
* components use 8-connectivity (thin diagonal structures stay connected),
* bicubic resizing is cubic convolution with a = -0.5 (Catmull-Rom style)
  and clamped borders; nearest-neighbor maps output pixel (r, c) to input
  pixel (floor((r+0.5)*sy), floor((c+0.5)*sx)).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import ndimage

from .core_data import BinaryMask, ProbabilityMap

_EIGHT_CONNECTED = np.ones((3, 3), dtype=np.uint8)


class DegeneratePolygonError(ValueError):
    """Component has no 2-D extent: fewer than 3 pixels or all collinear."""


@dataclass(frozen=True)
class Kernel:
    """Square all-ones structuring element of side `size`, anchor (size//2, size//2)."""

    size: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError(f"kernel size must be >= 1, got {self.size}")

    @property
    def anchor(self) -> tuple[int, int]:
        return (self.size // 2, self.size // 2)


def dilate(mask: BinaryMask, kernel: Kernel) -> BinaryMask:
    """Morphological dilation; out-of-bounds pixels count as 0.

    An input 1-pixel at p turns on every output pixel p + o with
    o in [-(size//2), size-1-size//2] along each axis.
    """
    k = kernel.size
    a = k // 2
    h, w = mask.data.shape
    padded = np.zeros((h + k - 1, w + k - 1), dtype=np.uint8)
    padded[k - 1 - a : k - 1 - a + h, k - 1 - a : k - 1 - a + w] = mask.data
    out = np.zeros((h, w), dtype=np.uint8)
    for i in range(k):
        for j in range(k):
            np.maximum(out, padded[i : i + h, j : j + w], out=out)
    return BinaryMask(out)


@dataclass(frozen=True)
class ConnectedComponent:
    """Maximal 8-connected set of foreground pixels."""

    label: int
    pixels: tuple[tuple[int, int], ...]  # raster order
    area: int
    bbox: tuple[int, int, int, int]  # min_row, min_col, max_row, max_col


def connected_components(mask: BinaryMask) -> list[ConnectedComponent]:
    """Partition foreground into 8-connected components.

    Labels start at 1 and follow the raster-scan order of each component's
    first pixel.
    """
    labeled, count = ndimage.label(mask.data, structure=_EIGHT_CONNECTED)
    if count == 0:
        return []
    flat = labeled.ravel()
    nonzero = np.flatnonzero(flat)
    order = nonzero[np.argsort(flat[nonzero], kind="stable")]
    sizes = np.bincount(flat[nonzero])[1:]
    groups = np.split(order, np.cumsum(sizes)[:-1])
    groups.sort(key=lambda g: int(g[0]))  # first-pixel raster order
    width = mask.data.shape[1]
    components = []
    for new_label, group in enumerate(groups, start=1):
        rows, cols = np.divmod(group, width)
        pixels = tuple(zip(rows.tolist(), cols.tolist()))
        bbox = (int(rows.min()), int(cols.min()), int(rows.max()), int(cols.max()))
        components.append(ConnectedComponent(new_label, pixels, len(pixels), bbox))
    return components


@dataclass(frozen=True)
class Polygon:
    """Simple polygon given as ordered (row, col) vertices."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.vertices) < 3:
            raise ValueError("polygon needs at least 3 vertices")

    def bbox(self) -> tuple[float, float, float, float]:
        rows = [v[0] for v in self.vertices]
        cols = [v[1] for v in self.vertices]
        return (min(rows), min(cols), max(rows), max(cols))


def _cross(o: tuple[float, float], a: tuple[float, float], b: tuple[float, float]) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(component: ConnectedComponent) -> Polygon:
    """Convex hull of the component's pixel centers, counter-clockwise.

    Counter-clockwise is meant with the first tuple element as x and the
    second as y (positive shoelace area). Raises DegeneratePolygonError for
    collinear or too-small components; callers fall back to the bbox.
    """
    points = sorted(set((float(r), float(c)) for r, c in component.pixels))
    if len(points) < 3:
        raise DegeneratePolygonError(f"component {component.label} has < 3 distinct pixels")
    lower: list[tuple[float, float]] = []
    for p in points:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(points):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegeneratePolygonError(f"component {component.label} is collinear")
    return Polygon(tuple(hull))


def point_in_polygon(point: tuple[float, float], polygon: Polygon) -> bool:
    """Even-odd containment test; boundary points count as inside."""
    x, y = float(point[0]), float(point[1])
    verts = polygon.vertices
    n = len(verts)
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        length = np.hypot(ex, ey)
        if length == 0.0:
            if np.hypot(x - ax, y - ay) <= 1e-9:
                return True
            continue
        # perpendicular distance and projection parameter along the edge
        dist = abs(ex * (y - ay) - ey * (x - ax)) / length
        t = ((x - ax) * ex + (y - ay) * ey) / (length * length)
        if dist <= 1e-9 and -1e-12 <= t <= 1.0 + 1e-12:
            return True
    inside = False
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        if (ay > y) != (by > y):
            xi = ax + (y - ay) * (bx - ax) / (by - ay)
            if x < xi:
                inside = not inside
    return inside


Raster = Union[np.ndarray, BinaryMask, ProbabilityMap]


def _as_array(raster: Raster) -> np.ndarray:
    if isinstance(raster, (BinaryMask, ProbabilityMap)):
        return raster.data
    return np.asarray(raster)


def _cubic_weights(t: np.ndarray) -> np.ndarray:
    # cubic convolution kernel with a = -0.5, taps at offsets -1..2
    a = -0.5
    w = np.empty((4, t.size), dtype=np.float64)
    x = 1.0 + t
    w[0] = a * (x * x * x - 5.0 * x * x + 8.0 * x - 4.0)
    x = t
    w[1] = (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0
    x = 1.0 - t
    w[2] = (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0
    x = 2.0 - t
    w[3] = a * (x * x * x - 5.0 * x * x + 8.0 * x - 4.0)
    return w


def _cubic_resize_axis(arr: np.ndarray, out_len: int, axis: int) -> np.ndarray:
    in_len = arr.shape[axis]
    src = (np.arange(out_len, dtype=np.float64) + 0.5) * (in_len / out_len) - 0.5
    base = np.floor(src).astype(np.intp)
    weights = _cubic_weights(src - base)
    out = np.zeros((out_len, arr.shape[1 - axis]) if axis == 0 else (arr.shape[0], out_len))
    for tap in range(4):
        idx = np.clip(base - 1 + tap, 0, in_len - 1)
        picked = np.take(arr, idx, axis=axis)
        w = weights[tap][:, None] if axis == 0 else weights[tap][None, :]
        out += picked * w
    return out


def resize(raster: Raster, new_width: int, new_height: int, method: str) -> np.ndarray:
    """Resample a raster to (new_height, new_width).

    `bicubic` interpolates in float with clamped edges and clamps the result
    to [0, 255]; `nearest` is pure index selection and preserves the input
    dtype (a {0,1} raster stays {0,1}).
    """
    arr = _as_array(raster)
    if new_width < 1 or new_height < 1:
        raise ValueError(f"output size must be positive, got {new_width}x{new_height}")
    in_h, in_w = arr.shape
    if method == "nearest":
        rows = np.floor((np.arange(new_height) + 0.5) * (in_h / new_height)).astype(np.intp)
        cols = np.floor((np.arange(new_width) + 0.5) * (in_w / new_width)).astype(np.intp)
        np.clip(rows, 0, in_h - 1, out=rows)
        np.clip(cols, 0, in_w - 1, out=cols)
        return arr[np.ix_(rows, cols)]
    if method == "bicubic":
        out = _cubic_resize_axis(arr.astype(np.float64), new_height, axis=0)
        out = _cubic_resize_axis(out, new_width, axis=1)
        return np.clip(out, 0.0, 255.0)
    raise ValueError(f"unknown resize method {method!r}")
