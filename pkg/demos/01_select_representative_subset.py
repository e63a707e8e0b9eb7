#!/usr/bin/env python3
"""Walk through representative-subset selection on a synthetic dataset.

Creates 120 small grayscale images whose brightness varies smoothly, then
runs the full chain: builtin descriptors -> PCA coordinates -> distances
from the mean -> equal-width bins -> decaying per-bin quotas -> evenly
spaced train/val picks. Outputs land in demo_output/select/.
"""

from pathlib import Path

import numpy as np

from trueset.core_data import DatasetManifest, ManifestEntry, write_manifest
from trueset.embed import FeatureProvider, features_for
from trueset.select import (
    apply_split,
    build_bins,
    distances_from_mean,
    emit_coordinates,
    pca_project,
    select_true_images,
    selection_quotas,
)

from PIL import Image

OUT = Path("demo_output/select")
OUT.mkdir(parents=True, exist_ok=True)

print("== 1. synthetic dataset ==")
rng = np.random.default_rng(7)
entries = []
for i in range(120):
    # brightness drifts with the index, plus texture noise, so the images
    # occupy a 1-D manifold the first principal component can recover
    base = 40 + 1.5 * i
    img = np.clip(base + rng.normal(0, 25, size=(24, 24)), 0, 255).astype(np.uint8)
    image_id = f"syn{i:03d}"
    Image.fromarray(img, mode="L").save(OUT / f"{image_id}.png")
    entries.append(ManifestEntry(image_id, f"{image_id}.png"))
manifest = DatasetManifest(entries, OUT)
print(f"wrote {len(manifest)} images under {OUT}")

print("\n== 2. feature vectors (builtin descriptor) ==")
table = features_for(manifest, FeatureProvider.builtin())
print(f"feature table: {len(table)} rows x {table.dim} dims")

print("\n== 3. PCA coordinates ==")
coords = pca_project(table, k=2)
c1 = coords.first_coordinates
print(f"first coordinate range: [{c1.min():.3f}, {c1.max():.3f}]")

print("\n== 4. distances and bins ==")
distances = distances_from_mean(coords)
bins = build_bins(distances, 10)
print(f"bin occupancy: {bins.counts.tolist()}")
print(f"bins by descending occupancy: {list(bins.idx_descending)}")

print("\n== 5. quotas along descending occupancy ==")
quotas = selection_quotas(bins, len(manifest), 0.5)
along = [quotas.select_mapping[b] for b in bins.idx_descending]
print(f"quotas: {along} (sum {sum(along)})")

print("\n== 6. train/val picks ==")
split = select_true_images(bins, quotas)
print(f"selected {len(split.train_ids)} train + {len(split.val_ids)} val "
      f"of {len(manifest)} images")
per_bin = {
    b: sum(1 for i in (*split.train_ids, *split.val_ids) if bins.bin_of[i] == b)
    for b in range(bins.n_bins)
}
print(f"picks per bin:   {[per_bin[b] for b in range(bins.n_bins)]}")
print(f"occupancy per bin: {bins.counts.tolist()}  (picks track occupancy)")

write_manifest(apply_split(manifest, split), OUT / "trueset.tsv")
emit_coordinates(coords, bins, OUT / "coords.csv")
print(f"\nwrote {OUT / 'trueset.tsv'} and {OUT / 'coords.csv'}")
