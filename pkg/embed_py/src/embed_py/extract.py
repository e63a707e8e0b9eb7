"""Encoder feature extraction over a dataset manifest.

Runs an EfficientNet-B0 class backbone over every image listed in a manifest
and writes one flattened float32 vector per image to a binary feature table,
plus a JSON provenance sidecar (backbone, weight checksum, stage, input
size). CPU-only operation is fully supported and the output is bit-identical
across runs.

The table format is the one the curation toolkit consumes: magic ``TDF1``,
little-endian u32 count and dimension, then per record a little-endian u16
id byte-length, the UTF-8 id, and the vector as little-endian f32 values.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import torch
from PIL import Image
from torchvision.models import efficientnet_b0

FEATURE_MAGIC = b"TDF1"
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class ExtractionConfig:
    """What to extract and where to put it."""

    manifest: Path
    out: Path
    input_size: tuple[int, int] = (384, 544)  # (height, width)
    stage: Optional[int] = None  # leading encoder stages to run; None = deepest (all)
    weights: str = "imagenet"  # "imagenet", "random", or a local .pth path
    seed: int = 0  # initialization seed for --weights random
    batch_size: int = 1
    sidecar: Optional[Path] = None

    def __post_init__(self) -> None:
        self.manifest = Path(self.manifest)
        self.out = Path(self.out)
        if self.sidecar is None:
            self.sidecar = self.out.with_suffix(self.out.suffix + ".provenance.json")
        if self.input_size[0] < 1 or self.input_size[1] < 1:
            raise ValueError("input size must be positive")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


def read_manifest_entries(path: Path) -> list[tuple[str, str]]:
    """(id, image_path) pairs from the tab-separated manifest format."""
    entries: list[tuple[str, str]] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
        image_id, image_path = parts[0], parts[1]
        if image_id in seen:
            raise ValueError(f"{path}:{lineno}: duplicate id {image_id!r}")
        seen.add(image_id)
        entries.append((image_id, image_path))
    return entries


def load_backbone(weights: str, seed: int) -> tuple[torch.nn.Module, str]:
    """EfficientNet-B0 feature stack with the requested weights.

    Returns (model, weights_label). "random" initializes deterministically
    from `seed`, a documented offline substitute when the pretrained
    checkpoint cannot be downloaded; a filesystem path loads a state dict.
    """
    if weights == "imagenet":
        from torchvision.models import EfficientNet_B0_Weights

        model = efficientnet_b0(weights=EfficientNet_B0_Weights.IMAGENET1K_V1)
        label = "imagenet"
    elif weights == "random":
        torch.manual_seed(seed)
        model = efficientnet_b0(weights=None)
        label = f"random(seed={seed})"
    else:
        model = efficientnet_b0(weights=None)
        state = torch.load(weights, map_location="cpu", weights_only=True)
        model.load_state_dict(state)
        label = str(weights)
    model.eval()
    return model, label


def state_dict_sha256(model: torch.nn.Module) -> str:
    digest = hashlib.sha256()
    for name, tensor in sorted(model.state_dict().items()):
        digest.update(name.encode("utf-8"))
        digest.update(tensor.detach().cpu().numpy().tobytes())
    return digest.hexdigest()


def preprocess(path: Path, input_size: tuple[int, int]) -> torch.Tensor:
    """PNG -> normalized CHW float tensor at the configured input size."""
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((input_size[1], input_size[0]), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - np.asarray(IMAGENET_MEAN, dtype=np.float32)) / np.asarray(
        IMAGENET_STD, dtype=np.float32
    )
    return torch.from_numpy(arr.transpose(2, 0, 1))


def extract_vectors(config: ExtractionConfig) -> tuple[list[str], np.ndarray, dict]:
    """Flattened deepest-stage (or truncated-stage) features, one row per image."""
    entries = read_manifest_entries(config.manifest)
    root = config.manifest.parent
    model, weights_label = load_backbone(config.weights, config.seed)
    n_stages = len(model.features)
    stage = n_stages if config.stage is None else config.stage
    if not 1 <= stage <= n_stages:
        raise ValueError(f"stage must lie in 1..{n_stages}, got {stage}")
    encoder = model.features[:stage]

    torch.set_num_threads(1)  # run-to-run bit stability on CPU
    rows: list[np.ndarray] = []
    with torch.no_grad():
        for start in range(0, len(entries), config.batch_size):
            chunk = entries[start : start + config.batch_size]
            tensors = []
            for image_id, image_path in chunk:
                full = root / image_path
                try:
                    tensors.append(preprocess(full, config.input_size))
                except Exception as exc:
                    raise RuntimeError(f"cannot decode image for id {image_id!r}: {full}") from exc
            output = encoder(torch.stack(tensors))
            flat = output.reshape(output.shape[0], -1).cpu().numpy().astype(np.float32)
            rows.extend(flat)
    ids = [image_id for image_id, _ in entries]
    dim = rows[0].shape[0] if rows else 0
    vectors = np.vstack(rows) if rows else np.zeros((0, 0), dtype=np.float32)
    provenance = {
        "backbone": "efficientnet_b0",
        "weights": weights_label,
        "weights_sha256": state_dict_sha256(model),
        "stage": stage,
        "input_size": list(config.input_size),
        "dim": int(dim),
        "images": len(ids),
    }
    return ids, vectors, provenance


def write_feature_table(ids: list[str], vectors: np.ndarray, path: Path) -> None:
    """Serialize the binary table format (see module docstring)."""
    arr = np.ascontiguousarray(vectors, dtype="<f4")
    chunks = [FEATURE_MAGIC, struct.pack("<II", len(ids), arr.shape[1])]
    for i, image_id in enumerate(ids):
        encoded = image_id.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise ValueError(f"id longer than 65535 bytes: {image_id[:32]!r}...")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(arr[i].tobytes())
    Path(path).write_bytes(b"".join(chunks))


def extract(config: ExtractionConfig) -> dict:
    """Run the extraction, write the table and the provenance sidecar."""
    ids, vectors, provenance = extract_vectors(config)
    write_feature_table(ids, vectors, config.out)
    config.sidecar.write_text(json.dumps(provenance, indent=2) + "\n", encoding="utf-8")
    return provenance
