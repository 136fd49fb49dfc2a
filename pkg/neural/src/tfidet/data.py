"""Dataset loading: manifest, grayscale images, normalized label boxes.

The on-disk layout is the generator's contract: a manifest.json listing
train/val entries, 8-bit grayscale images (PNG or P5), and one label file
per image with `class_id x_center y_center width height` lines, all
normalized to [0, 1] with top-origin y.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from PIL import Image


class DatasetError(ValueError):
    """Missing or inconsistent dataset directory."""


@dataclass(frozen=True)
class LabeledImage:
    """One training example: pixels in [0, 1] plus its normalized boxes."""
    image_path: str
    boxes: np.ndarray  # (n, 5): class_id, x_center, y_center, width, height
    scheme: str
    snr_db: float


@dataclass(frozen=True)
class Dataset:
    root: str
    manifest: dict
    train: Tuple[LabeledImage, ...]
    val: Tuple[LabeledImage, ...]

    @property
    def class_names(self) -> List[str]:
        ids = self.manifest["class_ids"]
        return [name for name, _ in sorted(ids.items(), key=lambda kv: kv[1])]

    @property
    def image_size(self) -> int:
        return int(self.manifest["image_size"])


def _parse_label_file(path: str) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 5:
                raise DatasetError(f"{path}:{ln}: expected 5 fields, got {len(fields)}")
            rows.append([float(v) for v in fields])
    boxes = np.asarray(rows, dtype=np.float64).reshape(-1, 5)
    if boxes.size and (boxes[:, 1:].min() < 0.0 or boxes[:, 1:].max() > 1.0):
        raise DatasetError(f"{path}: box coordinates outside [0, 1]")
    return boxes


def load_dataset(root: str) -> Dataset:
    """Read a generated dataset directory, validating the manifest."""
    manifest_path = os.path.join(root, "manifest.json")
    if not os.path.exists(manifest_path):
        raise DatasetError(f"no manifest.json under {root}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    for key in ("entries", "class_ids", "image_size", "counts"):
        if key not in manifest:
            raise DatasetError(f"manifest missing key {key!r}")
    splits = {}
    for split in ("train", "val"):
        items = []
        for entry in manifest["entries"].get(split, ()):
            img = os.path.join(root, entry["image"])
            lbl = os.path.join(root, entry["label"])
            if not (os.path.exists(img) and os.path.exists(lbl)):
                raise DatasetError(f"missing file for entry {entry['image']}")
            items.append(LabeledImage(
                image_path=img, boxes=_parse_label_file(lbl),
                scheme=entry.get("scheme", ""),
                snr_db=float(entry.get("snr_db", 0.0))))
        if len(items) != manifest["counts"].get(split, len(items)):
            raise DatasetError(f"{split} split size disagrees with manifest counts")
        splits[split] = tuple(items)
    if not splits["train"]:
        raise DatasetError("empty training split")
    return Dataset(root=root, manifest=manifest,
                   train=splits["train"], val=splits["val"])


def load_image(path: str, side: Optional[int] = None) -> np.ndarray:
    """Grayscale pixels in [0, 1], top-origin, optionally resized to side."""
    img = Image.open(path).convert("L")
    if side is not None and img.size != (side, side):
        img = img.resize((side, side), Image.BILINEAR)
    return np.asarray(img, dtype=np.float32) / 255.0
