"""Single-stage grid detector for thin horizontal line boxes.

The image is divided into a G x G grid; each cell predicts one box
(objectness, center offsets within the cell, normalized width/height) and
class logits.  One predictor per cell suffices here because adjacent
sub-pulse boxes are wider than one cell, so their centers never share one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import torch
from torch import nn


@dataclass(frozen=True)
class ModelConfig:
    side: int = 256           # network input resolution
    grid: int = 32            # cells per axis; side must be divisible by it
    channels: Tuple[int, ...] = (16, 32, 64)
    num_classes: int = 2
    class_names: Tuple[str, ...] = ("random", "costas")

    def __post_init__(self):
        if self.side % self.grid:
            raise ValueError("side must be a multiple of grid")
        if len(self.class_names) != self.num_classes:
            raise ValueError("class_names length must equal num_classes")


@dataclass(frozen=True)
class Detection:
    """One predicted box, normalized [0, 1] coordinates, top-origin y."""
    x_center: float
    y_center: float
    width: float
    height: float
    confidence: float
    class_id: int


class GridDetector(nn.Module):
    """Strided conv backbone plus a 1x1 prediction head."""

    def __init__(self, cfg: ModelConfig = ModelConfig()):
        super().__init__()
        self.cfg = cfg
        stride = cfg.side // cfg.grid
        layers: List[nn.Module] = []
        prev = 1
        downs = int(np.log2(stride))
        for i in range(downs):
            ch = cfg.channels[min(i, len(cfg.channels) - 1)]
            layers += [nn.Conv2d(prev, ch, 3, padding=1),
                       nn.BatchNorm2d(ch), nn.ReLU(inplace=True),
                       nn.MaxPool2d(2)]
            prev = ch
        layers += [nn.Conv2d(prev, prev, 3, padding=1),
                   nn.BatchNorm2d(prev), nn.ReLU(inplace=True)]
        self.backbone = nn.Sequential(*layers)
        self.head = nn.Conv2d(prev, 5 + cfg.num_classes, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """(B, 1, side, side) -> (B, 5 + C, grid, grid) raw logits."""
        return self.head(self.backbone(x))


def encode_targets(boxes: np.ndarray, cfg: ModelConfig) -> np.ndarray:
    """Dense target tensor (7, G, G): obj, tx, ty, sqrt(w), sqrt(h),
    class_id, loss mask.

    tx/ty are the box center's fractional position within its grid cell;
    w/h train in sqrt space so errors on thin boxes are not drowned out.
    Cells adjacent to a positive are masked out of the objectness loss
    (they see the same line and should not be forced to zero).  The last
    box wins if two centers collide in one cell (rare by design).
    """
    g = cfg.grid
    target = np.zeros((7, g, g), dtype=np.float32)
    target[6] = 1.0
    for class_id, xc, yc, w, h in boxes:
        cx = min(int(xc * g), g - 1)
        cy = min(int(yc * g), g - 1)
        target[6, max(cy - 1, 0):cy + 2, max(cx - 1, 0):cx + 2] = 0.0
    for class_id, xc, yc, w, h in boxes:
        cx = min(int(xc * g), g - 1)
        cy = min(int(yc * g), g - 1)
        target[0, cy, cx] = 1.0
        target[1, cy, cx] = xc * g - cx
        target[2, cy, cx] = yc * g - cy
        target[3, cy, cx] = np.sqrt(w)
        target[4, cy, cx] = np.sqrt(h)
        target[5, cy, cx] = class_id
        target[6, cy, cx] = 1.0
    return target


def detection_loss(pred: torch.Tensor, target: torch.Tensor,
                   box_weight: float = 10.0) -> torch.Tensor:
    """Masked objectness BCE + box regression MSE + class CE on positives."""
    obj_target = target[:, 0]
    loss_mask = target[:, 6]
    pos = obj_target > 0.5
    n_pos = int(pos.sum().item())
    pos_weight = torch.tensor(
        max((obj_target.numel() - n_pos) / max(n_pos, 1), 1.0),
        device=pred.device)
    obj_all = nn.functional.binary_cross_entropy_with_logits(
        pred[:, 0], obj_target, pos_weight=pos_weight, reduction="none")
    obj_loss = (obj_all * loss_mask).sum() / loss_mask.sum().clamp(min=1.0)
    if n_pos == 0:
        return obj_loss
    box_pred = torch.sigmoid(pred[:, 1:5].permute(0, 2, 3, 1)[pos])
    box_target = target[:, 1:5].permute(0, 2, 3, 1)[pos]
    box_loss = nn.functional.mse_loss(box_pred, box_target)
    cls_pred = pred[:, 5:].permute(0, 2, 3, 1)[pos]
    cls_target = target[:, 5][pos].long()
    cls_loss = nn.functional.cross_entropy(cls_pred, cls_target)
    return obj_loss + box_weight * box_loss + cls_loss


def _iou(a: Detection, b: Detection) -> float:
    ax0, ax1 = a.x_center - a.width / 2, a.x_center + a.width / 2
    ay0, ay1 = a.y_center - a.height / 2, a.y_center + a.height / 2
    bx0, bx1 = b.x_center - b.width / 2, b.x_center + b.width / 2
    by0, by1 = b.y_center - b.height / 2, b.y_center + b.height / 2
    xi = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    yi = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = xi * yi
    union = a.width * a.height + b.width * b.height - inter
    return inter / union if union > 0 else 0.0


def _same_line(a: Detection, b: Detection) -> bool:
    """True when two detections describe the same sub-pulse line.

    Thin boxes of slightly different heights barely overlap in IoU terms,
    so suppression keys on x-interval overlap plus row proximity instead.
    """
    lo = max(a.x_center - a.width / 2, b.x_center - b.width / 2)
    hi = min(a.x_center + a.width / 2, b.x_center + b.width / 2)
    x_overlap = max(0.0, hi - lo) / min(a.width, b.width)
    return x_overlap > 0.3 and abs(a.y_center - b.y_center) < 0.05


def decode_predictions(pred: torch.Tensor, cfg: ModelConfig,
                       conf_threshold: float = 0.5) -> List[Detection]:
    """Raw head output for one image -> thresholded, NMS-filtered boxes."""
    g = cfg.grid
    with torch.no_grad():
        obj = torch.sigmoid(pred[0]).cpu().numpy()
        box = torch.sigmoid(pred[1:5]).cpu().numpy()
        cls = pred[5:].argmax(dim=0).cpu().numpy()
    candidates = []
    for cy, cx in zip(*np.nonzero(obj >= conf_threshold)):
        candidates.append(Detection(
            x_center=(cx + box[0, cy, cx]) / g,
            y_center=(cy + box[1, cy, cx]) / g,
            width=float(np.clip(box[2, cy, cx] ** 2, 1e-4, 1.0)),
            height=float(np.clip(box[3, cy, cx] ** 2, 1e-4, 1.0)),
            confidence=float(obj[cy, cx]),
            class_id=int(cls[cy, cx])))
    candidates.sort(key=lambda d: -d.confidence)
    kept: List[Detection] = []
    for cand in candidates:
        if all(not _same_line(cand, k) for k in kept):
            kept.append(cand)
    return kept


def save_checkpoint(model: GridDetector, path: str, metrics: dict) -> None:
    torch.save({
        "state_dict": model.state_dict(),
        "config": {
            "side": model.cfg.side, "grid": model.cfg.grid,
            "channels": list(model.cfg.channels),
            "num_classes": model.cfg.num_classes,
            "class_names": list(model.cfg.class_names),
        },
        "metrics": metrics,
    }, path)


def load_checkpoint(path: str) -> GridDetector:
    blob = torch.load(path, map_location="cpu", weights_only=False)
    raw = blob["config"]
    cfg = ModelConfig(side=raw["side"], grid=raw["grid"],
                      channels=tuple(raw["channels"]),
                      num_classes=raw["num_classes"],
                      class_names=tuple(raw["class_names"]))
    model = GridDetector(cfg)
    model.load_state_dict(blob["state_dict"])
    model.eval()
    return model
