"""Builtin descriptor and feature-provider behavior."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import write_gray_png
from trueset.core_data import (
    DatasetManifest,
    FeatureTable,
    FeatureTableError,
    ManifestEntry,
    write_feature_table,
)
from trueset.embed import FeatureProvider, builtin_descriptor, features_for


def make_image_manifest(tmp_path, images: dict[str, np.ndarray]) -> DatasetManifest:
    entries = []
    for image_id, values in images.items():
        write_gray_png(tmp_path / f"{image_id}.png", values)
        entries.append(ManifestEntry(image_id, f"{image_id}.png"))
    return DatasetManifest(entries, tmp_path)


def test_descriptor_constant_image():
    vec = builtin_descriptor(np.full((32, 32), 100, dtype=np.uint8))
    assert vec.shape == (264,)
    assert np.allclose(vec[:256], 100 / 255)
    assert np.allclose(vec[256:], 0.0)  # zero gradient -> zero histogram


def test_descriptor_step_image_small_grid():
    # left column black, right column white; 4x2 with grid 2 -> cells [0,1,0,1]
    img = np.zeros((4, 2), dtype=np.uint8)
    img[:, 1] = 255
    vec = builtin_descriptor(img, grid=2, bins=8)
    assert np.allclose(vec[:4], [0.0, 1.0, 0.0, 1.0])
    # every pixel carries the same maximal gradient -> all mass in the top bin
    assert vec[4:].tolist() == [0.0] * 7 + [1.0]


def test_descriptor_histogram_sums_to_one_when_gradient_exists():
    rng = np.random.default_rng(0)
    vec = builtin_descriptor(rng.integers(0, 256, size=(20, 30)).astype(np.uint8))
    assert np.isclose(vec[256:].sum(), 1.0, atol=1e-6)


def test_descriptor_single_row_image():
    vec = builtin_descriptor(np.array([[0, 255, 0]], dtype=np.uint8), grid=2, bins=4)
    assert vec.shape == (8,)
    assert np.isfinite(vec).all()


def test_features_for_builtin_order_and_determinism(tmp_path):
    rng = np.random.default_rng(1)
    images = {f"im{i}": rng.integers(0, 256, size=(8, 8)) for i in range(5)}
    manifest = make_image_manifest(tmp_path, images)
    provider = FeatureProvider.builtin()
    t1 = features_for(manifest, provider, jobs=1)
    t4 = features_for(manifest, provider, jobs=4)
    assert t1.ids == tuple(images)
    assert np.array_equal(t1.vectors, t4.vectors)


def test_features_for_permutation_equivariance(tmp_path):
    rng = np.random.default_rng(2)
    images = {f"im{i}": rng.integers(0, 256, size=(8, 8)) for i in range(4)}
    manifest = make_image_manifest(tmp_path, images)
    reversed_manifest = DatasetManifest(list(reversed(manifest.entries)), tmp_path)
    a = features_for(manifest, FeatureProvider.builtin())
    b = features_for(reversed_manifest, FeatureProvider.builtin())
    assert a.ids == tuple(reversed(b.ids))
    assert np.array_equal(a.vectors, b.vectors[::-1])


def test_features_for_file_provider_reorders(tmp_path):
    write_gray_png(tmp_path / "a.png", np.zeros((2, 2)))
    write_gray_png(tmp_path / "b.png", np.zeros((2, 2)))
    manifest = DatasetManifest(
        [ManifestEntry("a", "a.png"), ManifestEntry("b", "b.png")], tmp_path
    )
    table = FeatureTable(("b", "a"), np.array([[2.0, 2.0], [1.0, 1.0]], dtype=np.float32))
    write_feature_table(table, tmp_path / "t.tdf")
    out = features_for(manifest, FeatureProvider.from_file(tmp_path / "t.tdf"))
    assert out.ids == ("a", "b")
    assert out.vectors[0, 0] == 1.0 and out.vectors[1, 0] == 2.0


def test_features_for_file_provider_missing_id(tmp_path):
    write_gray_png(tmp_path / "a.png", np.zeros((2, 2)))
    manifest = DatasetManifest([ManifestEntry("a", "a.png")], tmp_path)
    write_feature_table(FeatureTable(("zz",), np.ones((1, 2), dtype=np.float32)), tmp_path / "t.tdf")
    with pytest.raises(FeatureTableError, match="'a'"):
        features_for(manifest, FeatureProvider.from_file(tmp_path / "t.tdf"))


def test_provider_validation(tmp_path):
    with pytest.raises(ValueError):
        FeatureProvider("file")
    with pytest.raises(ValueError):
        FeatureProvider("magic")
    with pytest.raises(ValueError):
        FeatureProvider.builtin(grid=0)
