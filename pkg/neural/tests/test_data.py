"""Dataset loading and validation."""

import json
import os

import numpy as np
import pytest

from tfidet.data import DatasetError, load_dataset, load_image

from conftest import make_dataset


def test_load_dataset_counts_and_boxes(line_dataset):
    ds = load_dataset(line_dataset)
    assert len(ds.train) == 48 and len(ds.val) == 12
    assert ds.class_names == ["lines"]
    assert ds.image_size == 128
    for item in ds.train[:3]:
        assert item.boxes.shape[1] == 5
        assert item.boxes[:, 1:].min() >= 0.0
        assert item.boxes[:, 1:].max() <= 1.0


def test_missing_manifest_rejected(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(str(tmp_path))


def test_missing_image_rejected(tmp_path):
    root = str(tmp_path / "ds")
    make_dataset(root, n_train=2, n_val=1)
    manifest = json.load(open(os.path.join(root, "manifest.json")))
    os.remove(os.path.join(root, manifest["entries"]["train"][0]["image"]))
    with pytest.raises(DatasetError):
        load_dataset(root)


def test_count_mismatch_rejected(tmp_path):
    root = str(tmp_path / "ds")
    make_dataset(root, n_train=2, n_val=1)
    path = os.path.join(root, "manifest.json")
    manifest = json.load(open(path))
    manifest["counts"]["train"] = 5
    json.dump(manifest, open(path, "w"))
    with pytest.raises(DatasetError):
        load_dataset(root)


def test_malformed_label_rejected(tmp_path):
    root = str(tmp_path / "ds")
    make_dataset(root, n_train=2, n_val=1)
    manifest = json.load(open(os.path.join(root, "manifest.json")))
    label = os.path.join(root, manifest["entries"]["train"][0]["label"])
    with open(label, "w") as fh:
        fh.write("0 0.5 0.5\n")
    with pytest.raises(DatasetError):
        load_dataset(root)


def test_empty_train_split_rejected(tmp_path):
    root = str(tmp_path / "ds")
    make_dataset(root, n_train=0, n_val=1)
    with pytest.raises(DatasetError):
        load_dataset(root)


def test_load_image_range_and_resize(line_dataset):
    ds = load_dataset(line_dataset)
    pix = load_image(ds.train[0].image_path)
    assert pix.shape == (128, 128)
    assert 0.0 <= pix.min() and pix.max() <= 1.0
    small = load_image(ds.train[0].image_path, 64)
    assert small.shape == (64, 64)
    assert small.dtype == np.float32
