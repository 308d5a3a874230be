import json

import numpy as np
import pytest
import torch
from PIL import Image

from vitfeat.cli import main
from vitfeat.extract import DimensionMismatch, MissingCheckpoint, extract, load_model
from vitfeat.models import get_model
from vitfeat.vit import VisionTransformer

MODEL = "vit_tiny_patch16_224"  # smallest of the thirteen: quick on CPU


@pytest.fixture(scope="module")
def checkpoint_dir(tmp_path_factory):
    """A random-weight checkpoint in the exact timm key layout."""
    d = tmp_path_factory.mktemp("ckpt")
    torch.manual_seed(0)
    net = VisionTransformer(get_model(MODEL))
    state = {k: torch.randn_like(v) * 0.02 for k, v in net.state_dict().items()}
    state["head.weight"] = torch.zeros(1000, 192)  # dropped on load
    state["head.bias"] = torch.zeros(1000)
    torch.save(state, d / f"{MODEL}.pth")
    return d


@pytest.fixture(scope="module")
def image_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("imgs")
    rng = np.random.default_rng(1)
    for cls in ("no", "yes"):
        (d / cls).mkdir()
        for i in range(3):
            arr = rng.integers(0, 256, (224, 224), dtype=np.uint8)
            Image.fromarray(arr, "L").save(d / cls / f"img{i}.png")
    return d


def test_extract_shapes_and_order(checkpoint_dir, image_dir, tmp_path):
    out = tmp_path / "feats.csv"
    manifest = extract(image_dir, MODEL, out, checkpoint_dir, batch_size=4)
    assert manifest["n"] == 6
    assert manifest["embed_dim"] == 192
    assert manifest["class_names"] == ["no", "yes"]
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 7
    ids = [ln.split(",")[0] for ln in lines[1:]]
    assert ids == sorted(ids)  # lexicographic filename order
    assert ids[0] == "no/img0"


def test_extraction_is_deterministic(checkpoint_dir, image_dir, tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    extract(image_dir, MODEL, a, checkpoint_dir)
    extract(image_dir, MODEL, b, checkpoint_dir)
    assert a.read_bytes() == b.read_bytes()


def test_downstream_package_reads_the_output(checkpoint_dir, image_dir, tmp_path):
    # interop through the file format only
    from fusepipe.featureio import read_labeled_csv

    out = tmp_path / "feats.csv"
    extract(image_dir, MODEL, out, checkpoint_dir)
    ds = read_labeled_csv(out, ["no", "yes"])
    assert ds.features.dim == 192
    assert ds.n == 6
    assert ds.features.model_tag == MODEL
    manifest = json.loads((tmp_path / "feats.csv.manifest.json").read_text())
    assert manifest["sha256"] == __import__("hashlib").sha256(out.read_bytes()).hexdigest()


def test_missing_checkpoint(image_dir, tmp_path):
    with pytest.raises(MissingCheckpoint):
        extract(image_dir, MODEL, tmp_path / "x.csv", tmp_path / "empty")


def test_dimension_mismatch(checkpoint_dir, tmp_path):
    d = tmp_path / "wrong"
    d.mkdir()
    Image.fromarray(np.zeros((128, 128), np.uint8), "L").save(d / "small.png")
    with pytest.raises(DimensionMismatch):
        extract(d, MODEL, tmp_path / "x.csv", checkpoint_dir)


def test_row_count_matches_manifest(checkpoint_dir, image_dir, tmp_path):
    out = tmp_path / "feats.csv"
    manifest = extract(image_dir, MODEL, out, checkpoint_dir)
    rows = out.read_text().strip().split("\n")[1:]
    assert len(rows) == manifest["n"]
    assert all(len(r.split(",")) == 2 + manifest["embed_dim"] for r in rows)


def test_cli_list_and_extract(checkpoint_dir, image_dir, tmp_path, capsys):
    assert main(["list-models"]) == 0
    out_text = capsys.readouterr().out
    assert "vit_base_patch16_224" in out_text
    out = tmp_path / "cli.csv"
    code = main([
        "extract", "--model", MODEL, "--images", str(image_dir),
        "--out", str(out), "--checkpoint-dir", str(checkpoint_dir),
    ])
    assert code == 0
    assert out.exists()
    assert main([
        "extract", "--model", MODEL, "--images", str(image_dir),
        "--out", str(out), "--checkpoint-dir", str(tmp_path / "none"),
    ]) == 2


def test_frozen_weights(checkpoint_dir):
    net = load_model(get_model(MODEL), checkpoint_dir)
    assert not any(p.requires_grad for p in net.parameters())
    assert not net.training
