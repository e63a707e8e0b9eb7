"""Shared test helpers: ascii-art masks, synthetic crack generators, PNG writers."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from trueset.core_data import BinaryMask


def mask_from_art(art: list[str]) -> BinaryMask:
    """Build a mask from rows of '.' (0) and '#' (1)."""
    data = np.array([[1 if ch == "#" else 0 for ch in row] for row in art], dtype=np.uint8)
    return BinaryMask(data)


def random_mask(rng: np.random.Generator, height: int, width: int, density: float = 0.3) -> BinaryMask:
    return BinaryMask((rng.random((height, width)) < density).astype(np.uint8))


def random_crack_mask(rng: np.random.Generator, height: int = 48, width: int = 48) -> BinaryMask:
    """Thin random-walk strokes of varying thickness, resembling crack annotations."""
    data = np.zeros((height, width), dtype=np.uint8)
    for _ in range(int(rng.integers(1, 4))):
        r = int(rng.integers(0, height))
        c = int(rng.integers(0, width))
        thickness = int(rng.integers(1, 3))
        for _ in range(int(rng.integers(10, 120))):
            data[max(0, r) : min(height, r + thickness), max(0, c) : min(width, c + thickness)] = 1
            r += int(rng.integers(-1, 2))
            c += int(rng.integers(-1, 2))
            r = min(max(r, 0), height - 1)
            c = min(max(c, 0), width - 1)
    return BinaryMask(data)


def write_gray_png(path: Path, values: np.ndarray) -> None:
    Image.fromarray(np.asarray(values, dtype=np.uint8), mode="L").save(path, format="PNG")


def write_rgb_png(path: Path, values: np.ndarray) -> None:
    Image.fromarray(np.asarray(values, dtype=np.uint8), mode="RGB").save(path, format="PNG")
