"""Training loop and validation metrics for the grid detector."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from .data import Dataset, LabeledImage, load_image
from .model import (Detection, GridDetector, ModelConfig, decode_predictions,
                    detection_loss, encode_targets, _iou)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 16
    learning_rate: float = 1e-3
    seed: int = 0
    conf_threshold: float = 0.5
    iou_threshold: float = 0.5


def _set_determinism(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)


def _batch(items: Sequence[LabeledImage], cfg: ModelConfig
           ) -> Tuple[torch.Tensor, torch.Tensor]:
    images = np.stack([load_image(it.image_path, cfg.side) for it in items])
    targets = np.stack([encode_targets(it.boxes, cfg) for it in items])
    return (torch.from_numpy(images).unsqueeze(1),
            torch.from_numpy(targets))


def _boxes_to_detections(boxes: np.ndarray) -> List[Detection]:
    return [Detection(x_center=b[1], y_center=b[2], width=b[3], height=b[4],
                      confidence=1.0, class_id=int(b[0])) for b in boxes]


def evaluate(model: GridDetector, items: Sequence[LabeledImage],
             conf_threshold: float = 0.5, iou_threshold: float = 0.5,
             ) -> Dict[str, float]:
    """Greedy confidence-ordered matching at the given IoU threshold."""
    model.eval()
    tp = fp = fn = 0
    with torch.no_grad():
        for item in items:
            x = torch.from_numpy(
                load_image(item.image_path, model.cfg.side))[None, None]
            pred = model(x)[0]
            found = decode_predictions(pred, model.cfg, conf_threshold)
            truth = _boxes_to_detections(item.boxes)
            matched = [False] * len(truth)
            for det in found:
                best, best_iou = -1, iou_threshold
                for i, t in enumerate(truth):
                    if matched[i]:
                        continue
                    iou = _iou(det, t)
                    if iou >= best_iou:
                        best, best_iou = i, iou
                if best >= 0:
                    matched[best] = True
                    tp += 1
                else:
                    fp += 1
            fn += matched.count(False)
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    return {"recall": recall, "precision": precision,
            "true_positives": tp, "false_positives": fp,
            "false_negatives": fn}


def train(dataset: Dataset, model_cfg: Optional[ModelConfig] = None,
          train_cfg: TrainConfig = TrainConfig(),
          log=lambda msg: None) -> Tuple[GridDetector, Dict[str, float]]:
    """Fit the detector on the train split; report metrics on val."""
    if model_cfg is None:
        names = tuple(dataset.class_names)
        model_cfg = ModelConfig(num_classes=len(names), class_names=names)
    _set_determinism(train_cfg.seed)
    model = GridDetector(model_cfg)
    optimizer = torch.optim.Adam(model.parameters(), lr=train_cfg.learning_rate)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(
        optimizer, T_max=train_cfg.epochs, eta_min=train_cfg.learning_rate / 50)
    order = list(range(len(dataset.train)))
    rng = random.Random(train_cfg.seed)
    history = []
    for epoch in range(train_cfg.epochs):
        model.train()
        rng.shuffle(order)
        total = 0.0
        for lo in range(0, len(order), train_cfg.batch_size):
            items = [dataset.train[i] for i in order[lo:lo + train_cfg.batch_size]]
            x, target = _batch(items, model_cfg)
            optimizer.zero_grad()
            loss = detection_loss(model(x), target)
            loss.backward()
            optimizer.step()
            total += float(loss.item()) * len(items)
        scheduler.step()
        epoch_loss = total / len(order)
        history.append(epoch_loss)
        log(f"epoch {epoch + 1}/{train_cfg.epochs}: loss {epoch_loss:.4f}")
    metrics = evaluate(model, dataset.val or dataset.train,
                       train_cfg.conf_threshold, train_cfg.iou_threshold)
    metrics["final_loss"] = history[-1]
    metrics["first_loss"] = history[0]
    return model, metrics
