"""Shared fixtures: a tiny synthetic dataset in the generator's layout.

Images are drawn directly (bright horizontal line segments on noise), so
these tests exercise the detector package without the signal simulator.
"""

import json
import os

import numpy as np
import pytest
from PIL import Image

SIDE = 128
LINE_H = SIDE / 32.0


def _draw_example(rng, n_boxes=5):
    """One labeled image: horizontal bright bars at random rows/columns."""
    pixels = np.clip(rng.normal(0.05, 0.02, (SIDE, SIDE)), 0.0, 1.0)
    boxes = []
    x = int(rng.integers(5, 20))
    for _ in range(n_boxes):
        w = int(rng.integers(10, 25))
        if x + w >= SIDE - 2:
            break
        y = int(rng.integers(10, SIDE - 10))
        half = int(LINE_H // 2)
        pixels[y - half:y + half, x:x + w] = rng.uniform(0.7, 1.0)
        boxes.append((0, (x + w / 2) / SIDE, y / SIDE, w / SIDE, LINE_H / SIDE))
        x += w
    return pixels, boxes


def make_dataset(root, n_train=48, n_val=12, seed=0):
    rng = np.random.default_rng(seed)
    entries = {"train": [], "val": []}
    for split, count in (("train", n_train), ("val", n_val)):
        os.makedirs(os.path.join(root, split, "images"), exist_ok=True)
        os.makedirs(os.path.join(root, split, "labels"), exist_ok=True)
        for i in range(count):
            pixels, boxes = _draw_example(rng)
            stem = f"lines_{split}_{i:03d}"
            img_rel = f"{split}/images/{stem}.png"
            lbl_rel = f"{split}/labels/{stem}.txt"
            Image.fromarray(np.round(255 * pixels).astype(np.uint8),
                            mode="L").save(os.path.join(root, img_rel))
            with open(os.path.join(root, lbl_rel), "w", encoding="utf-8") as fh:
                for b in boxes:
                    fh.write("%d %.6f %.6f %.6f %.6f\n" % b)
            entries[split].append({"image": img_rel, "label": lbl_rel,
                                   "scheme": "lines", "snr_db": 10.0})
    manifest = {
        "seed": seed,
        "class_ids": {"lines": 0},
        "image_size": SIDE,
        "counts": {k: len(v) for k, v in entries.items()},
        "entries": entries,
    }
    with open(os.path.join(root, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


@pytest.fixture(scope="session")
def line_dataset(tmp_path_factory):
    root = str(tmp_path_factory.mktemp("lines_ds"))
    make_dataset(root)
    return root
