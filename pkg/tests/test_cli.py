"""End-to-end subcommand runs on a synthetic dataset, exit codes, flag surface."""

from __future__ import annotations

import os

import numpy as np
import pytest

from conftest import random_crack_mask, write_gray_png
from trueset.cli import build_parser, run
from trueset.core_data import (
    load_manifest,
    read_feature_table,
    write_mask,
    write_probability_map,
    ProbabilityMap,
)


@pytest.fixture()
def dataset(tmp_path):
    """Synthetic 30-image dataset with images, masks and a manifest."""
    rng = np.random.default_rng(123)
    (tmp_path / "gt").mkdir()
    lines = []
    for i in range(30):
        image_id = f"img{i:03d}"
        write_gray_png(tmp_path / f"{image_id}.png", rng.integers(0, 256, size=(12, 12)))
        write_mask(random_crack_mask(rng, 12, 12), tmp_path / "gt" / f"{image_id}.png")
        lines.append(f"{image_id}\t{image_id}.png\tgt/{image_id}.png\tunassigned")
    manifest = tmp_path / "data.tsv"
    manifest.write_text("".join(line + "\n" for line in lines))
    return tmp_path, manifest


def test_features_roundtrip(dataset, tmp_path):
    root, manifest = dataset
    out = tmp_path / "feat.tdf"
    assert run(["features", "--manifest", str(manifest), "--out", str(out)]) == 0
    table = read_feature_table(out)
    assert len(table) == 30 and table.dim == 264


def test_select_writes_subset_and_coords(dataset, tmp_path):
    root, manifest = dataset
    out = tmp_path / "trueset.tsv"
    code = run(["select", "--manifest", str(manifest), "--out", str(out)])
    assert code == 0
    subset = load_manifest(out)
    splits = {e.split for e in subset.entries}
    assert splits <= {"train", "val"} and len(subset) > 0
    coords = (tmp_path / "trueset_coords.csv").read_text().splitlines()
    assert coords[0] == "id,c1,distance,bin"
    assert len(coords) == 31


def test_select_file_provider_matches_builtin(dataset, tmp_path):
    root, manifest = dataset
    feat = tmp_path / "feat.tdf"
    run(["features", "--manifest", str(manifest), "--out", str(feat)])
    out_a = tmp_path / "a.tsv"
    out_b = tmp_path / "b.tsv"
    assert run(["select", "--manifest", str(manifest), "--out", str(out_a)]) == 0
    assert (
        run(
            ["select", "--manifest", str(manifest), "--provider", "file",
             "--features", str(feat), "--out", str(out_b)]
        )
        == 0
    )
    assert out_a.read_bytes() == out_b.read_bytes()


def test_split_ratio(dataset, tmp_path):
    root, manifest = dataset
    out = tmp_path / "allset.tsv"
    assert run(["split", "--manifest", str(manifest), "--out", str(out)]) == 0
    subset = load_manifest(out)
    assert sum(e.split == "train" for e in subset.entries) == 27
    assert sum(e.split == "val" for e in subset.entries) == 3


def test_augment_counts_and_determinism(dataset, tmp_path):
    root, manifest = dataset
    trueset = tmp_path / "trueset.tsv"
    run(["select", "--manifest", str(manifest), "--out", str(trueset)])
    n_train = sum(e.split == "train" for e in load_manifest(trueset).entries)
    n_val = sum(e.split == "val" for e in load_manifest(trueset).entries)

    out1, out2 = tmp_path / "aug1", tmp_path / "aug2"
    argv = ["augment", "--trueset", str(trueset), "--mode", "mix", "--seed", "7"]
    assert run(argv + ["--out-dir", str(out1), "--jobs", "1"]) == 0
    assert run(argv + ["--out-dir", str(out2), "--jobs", "8"]) == 0

    augmented = load_manifest(out1 / "manifest.tsv")
    assert sum(e.split == "train" for e in augmented.entries) == 4 * n_train
    assert sum(e.split == "val" for e in augmented.entries) == n_val

    assert (out1 / "manifest.tsv").read_bytes() == (out2 / "manifest.tsv").read_bytes()
    for png in sorted(out1.glob("*.png")):
        assert png.read_bytes() == (out2 / png.name).read_bytes()


def test_augment_custom_kernels(dataset, tmp_path):
    root, manifest = dataset
    trueset = tmp_path / "trueset.tsv"
    run(["select", "--manifest", str(manifest), "--out", str(trueset)])
    n_train = sum(e.split == "train" for e in load_manifest(trueset).entries)
    out = tmp_path / "aug_k"
    assert run(["augment", "--trueset", str(trueset), "--mode", "sw",
                "--kernels", "3,5", "--out-dir", str(out)]) == 0
    augmented = load_manifest(out / "manifest.tsv")
    assert sum(e.split == "train" for e in augmented.entries) == 3 * n_train


def test_augment_seed_env_fallback(dataset, tmp_path, monkeypatch):
    root, manifest = dataset
    trueset = tmp_path / "trueset.tsv"
    run(["select", "--manifest", str(manifest), "--out", str(trueset)])
    monkeypatch.setenv("TRUESET_SEED", "7")
    out_env = tmp_path / "aug_env"
    assert run(["augment", "--trueset", str(trueset), "--mode", "sl",
                "--out-dir", str(out_env)]) == 0
    out_flag = tmp_path / "aug_flag"
    run(["augment", "--trueset", str(trueset), "--mode", "sl", "--seed", "7",
         "--out-dir", str(out_flag)])
    for png in sorted(out_env.glob("*.png")):
        assert png.read_bytes() == (out_flag / png.name).read_bytes()


@pytest.fixture()
def predictions(dataset, tmp_path):
    root, manifest = dataset
    rng = np.random.default_rng(5)
    pred_dir = tmp_path / "pred"
    pred_dir.mkdir()
    for e in load_manifest(manifest).entries:
        values = rng.random((12, 12))
        write_probability_map(ProbabilityMap(values), pred_dir / f"{e.id}.png")
    return pred_dir


def test_evaluate_single_row(dataset, predictions, capsys):
    root, manifest = dataset
    assert run(["evaluate", "--pred-dir", str(predictions),
                "--gt-manifest", str(manifest), "--threshold", "0.5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "dataset,T,G,C,mIoU,P,R,F"
    assert len(lines) == 2 and lines[1].startswith("data,0.50,")


def test_evaluate_grid(dataset, predictions, tmp_path):
    root, manifest = dataset
    out = tmp_path / "m.csv"
    assert run(["evaluate", "--pred-dir", str(predictions), "--gt-manifest",
                str(manifest), "--grid", "--out", str(out)]) == 0
    assert out.read_text().startswith("dataset,T,")


def test_evaluate_invert_masks_changes_result(dataset, predictions, tmp_path):
    root, manifest = dataset
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["evaluate", "--pred-dir", str(predictions), "--gt-manifest", str(manifest), "--out", str(a)])
    run(["evaluate", "--pred-dir", str(predictions), "--gt-manifest", str(manifest),
         "--invert-masks", "--out", str(b)])
    assert a.read_text() != b.read_text()


def test_curves_and_loss(dataset, predictions, tmp_path):
    root, manifest = dataset
    roc = tmp_path / "roc.csv"
    assert run(["curves", "--pred-dir", str(predictions), "--gt-manifest", str(manifest),
                "--curve", "roc", "--out", str(roc)]) == 0
    assert len(roc.read_text().strip().splitlines()) == 101
    loss_csv = tmp_path / "loss.csv"
    assert run(["loss", "--pred-dir", str(predictions), "--gt-manifest", str(manifest),
                "--out", str(loss_csv)]) == 0
    lines = loss_csv.read_text().strip().splitlines()
    assert lines[0] == "id,focal,dice,total"
    assert len(lines) == 31


def test_exit_codes(dataset, tmp_path, capsys):
    root, manifest = dataset
    assert run(["select"]) == 2  # missing required flags
    assert run(["no-such-command"]) == 2
    assert run(["--help"]) == 0
    assert run(["select", "--manifest", str(tmp_path / "missing.tsv"),
                "--out", str(tmp_path / "o.tsv")]) == 1  # runtime failure
    capsys.readouterr()


def test_missing_prediction_names_id(dataset, tmp_path, capsys):
    root, manifest = dataset
    empty = tmp_path / "empty_pred"
    empty.mkdir()
    assert run(["evaluate", "--pred-dir", str(empty), "--gt-manifest", str(manifest)]) == 1
    assert "img000" in capsys.readouterr().err


def test_help_documents_defaults():
    parser = build_parser()
    help_by_command = {
        "augment": ["3,5,8", "50", "100", "200", "4", "TRUESET_SEED"],
        "select": ["10", "0.5"],
        "loss": ["0.5", "3.33", "1"],
    }
    sub_actions = next(
        a for a in parser._actions if isinstance(a, type(parser._subparsers._group_actions[0]))
    )
    for name, expected in help_by_command.items():
        text = sub_actions.choices[name].format_help()
        for token in expected:
            assert token in text, f"{name} help must mention {token}"
