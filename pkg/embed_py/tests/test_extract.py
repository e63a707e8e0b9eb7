"""Extraction contract: shape, determinism, and the cross-package byte round trip."""

from __future__ import annotations

import hashlib
import json

import numpy as np
import pytest
from PIL import Image

from embed_py.cli import run
from embed_py.extract import ExtractionConfig, extract, extract_vectors

# the consuming side of the round trip: the curation toolkit's reader
from trueset.core_data import read_feature_table


@pytest.fixture()
def three_image_manifest(tmp_path):
    rng = np.random.default_rng(3)
    lines = []
    for i in range(3):
        image_id = f"fix{i}"
        arr = rng.integers(0, 256, size=(20, 24, 3), dtype=np.uint8)
        Image.fromarray(arr, mode="RGB").save(tmp_path / f"{image_id}.png")
        lines.append(f"{image_id}\t{image_id}.png\t-\tunassigned")
    manifest = tmp_path / "m.tsv"
    manifest.write_text("".join(line + "\n" for line in lines))
    return manifest


def config_for(manifest, out, **kw) -> ExtractionConfig:
    defaults = dict(input_size=(32, 32), weights="random", seed=11)
    defaults.update(kw)
    return ExtractionConfig(manifest=manifest, out=out, **defaults)


def test_shapes_and_constant_dim(three_image_manifest, tmp_path):
    ids, vectors, provenance = extract_vectors(config_for(three_image_manifest, tmp_path / "f.tdf"))
    assert ids == ["fix0", "fix1", "fix2"]
    assert vectors.shape == (3, 1280)  # 32x32 input -> 1x1 spatial map of 1280 channels
    assert vectors.dtype == np.float32
    assert provenance["stage"] == 9
    assert provenance["input_size"] == [32, 32]


def test_duplicate_image_gives_identical_vectors(three_image_manifest, tmp_path):
    manifest = tmp_path / "dup.tsv"
    first = three_image_manifest.read_text().splitlines()[0].split("\t")
    manifest.write_text(
        f"a1\t{first[1]}\t-\tunassigned\na2\t{first[1]}\t-\tunassigned\n"
    )
    _, vectors, _ = extract_vectors(config_for(manifest, tmp_path / "f.tdf"))
    assert np.array_equal(vectors[0], vectors[1])


def test_cross_package_round_trip(three_image_manifest, tmp_path):
    out = tmp_path / "features.tdf"
    config = config_for(three_image_manifest, out)
    ids, vectors, _ = extract_vectors(config)
    extract(config)
    table = read_feature_table(out)  # read by the primary artifact
    assert list(table.ids) == ids
    assert table.dim == vectors.shape[1]
    assert np.array_equal(table.vectors, vectors)  # all f32 payloads bit-exact
    assert table.vectors.tobytes() == vectors.tobytes()


def test_two_runs_are_checksum_identical(three_image_manifest, tmp_path):
    out1, out2 = tmp_path / "a.tdf", tmp_path / "b.tdf"
    extract(config_for(three_image_manifest, out1))
    extract(config_for(three_image_manifest, out2))
    h1 = hashlib.sha256(out1.read_bytes()).hexdigest()
    h2 = hashlib.sha256(out2.read_bytes()).hexdigest()
    assert h1 == h2
    side1 = json.loads((tmp_path / "a.tdf.provenance.json").read_text())
    side2 = json.loads((tmp_path / "b.tdf.provenance.json").read_text())
    assert side1 == side2
    assert side1["weights_sha256"] == side2["weights_sha256"]


def test_stage_selector_changes_dim(three_image_manifest, tmp_path):
    _, deepest, _ = extract_vectors(config_for(three_image_manifest, tmp_path / "f.tdf"))
    _, shallow, _ = extract_vectors(config_for(three_image_manifest, tmp_path / "g.tdf", stage=3))
    assert shallow.shape[1] != deepest.shape[1]
    with pytest.raises(ValueError, match="stage"):
        extract_vectors(config_for(three_image_manifest, tmp_path / "h.tdf", stage=99))


def test_missing_image_fails_naming_id(three_image_manifest, tmp_path):
    manifest = tmp_path / "bad.tsv"
    manifest.write_text("ghost\tnot_there.png\t-\tunassigned\n")
    with pytest.raises(RuntimeError, match="'ghost'"):
        extract_vectors(config_for(manifest, tmp_path / "f.tdf"))


def test_cli_end_to_end(three_image_manifest, tmp_path, capsys):
    out = tmp_path / "cli.tdf"
    code = run(
        ["--manifest", str(three_image_manifest), "--out", str(out),
         "--input-size", "32x32", "--weights", "random", "--seed", "11"]
    )
    assert code == 0
    assert "3 vectors" in capsys.readouterr().out
    assert read_feature_table(out).vectors.shape == (3, 1280)
    assert run(["--manifest", str(tmp_path / "nope.tsv"), "--out", str(out)]) == 1
