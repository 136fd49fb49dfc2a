"""Target encoding, decoding, loss behavior, checkpoint roundtrip."""

import numpy as np
import pytest
import torch

from tfidet.model import (Detection, GridDetector, ModelConfig,
                          decode_predictions, detection_loss, encode_targets,
                          load_checkpoint, save_checkpoint, _iou, _same_line)


MC = ModelConfig(side=128, grid=32, num_classes=1, class_names=("lines",))


def test_model_output_shape():
    model = GridDetector(MC)
    out = model(torch.zeros(3, 1, 128, 128))
    assert out.shape == (3, 5 + MC.num_classes, 32, 32)


def test_config_validates_divisibility():
    with pytest.raises(ValueError):
        ModelConfig(side=100, grid=32)


def test_encode_targets_places_boxes_in_cells():
    boxes = np.array([[0, 0.5, 0.25, 0.1, 0.03125]])
    target = encode_targets(boxes, MC)
    cy, cx = int(0.25 * 32), int(0.5 * 32)
    assert target[0, cy, cx] == 1.0
    assert target[3, cy, cx] == pytest.approx(np.sqrt(0.1))
    assert target[4, cy, cx] == pytest.approx(np.sqrt(0.03125))
    assert target[0].sum() == 1.0
    # objectness loss masked out around the positive, active at the positive
    assert target[6, cy, cx] == 1.0
    assert target[6, cy, cx + 1] == 0.0
    assert target[6, cy + 5, cx + 5] == 1.0


def test_encode_decode_roundtrip_on_ideal_logits():
    boxes = np.array([[0, 0.40, 0.75, 0.10, 0.03125],
                      [0, 0.55, 0.50, 0.08, 0.03125]])
    target = encode_targets(boxes, MC)
    # build logits that sigmoid back to the encoded target exactly-ish
    eps = 1e-6
    logits = np.zeros((5 + MC.num_classes, 32, 32), dtype=np.float32)
    logits[0] = -20.0
    pos = target[0] > 0.5
    logits[0][pos] = 20.0
    reg = np.clip(target[1:5], eps, 1 - eps)
    logits[1:5] = np.log(reg / (1 - reg))
    found = decode_predictions(torch.from_numpy(logits), MC, 0.5)
    assert len(found) == 2
    found.sort(key=lambda d: d.x_center)
    for det, box in zip(found, boxes):
        assert det.x_center == pytest.approx(box[1], abs=1e-3)
        assert det.y_center == pytest.approx(box[2], abs=1e-3)
        assert det.width == pytest.approx(box[3], abs=1e-3)
        assert det.height == pytest.approx(box[4], abs=1e-3)


def test_nms_suppresses_same_line_duplicates():
    logits = np.full((6, 32, 32), -20.0, dtype=np.float32)
    # two adjacent cells claiming the same line, different confidence
    for cx, conf in ((16, 20.0), (17, 10.0)):
        logits[0, 8, cx] = conf
        logits[1:5, 8, cx] = 0.0  # sigmoid -> 0.5 offsets, w = h = 0.25
    found = decode_predictions(torch.from_numpy(logits), MC, 0.5)
    assert len(found) == 1
    assert found[0].confidence > 0.99


def test_same_line_predicate():
    a = Detection(0.5, 0.5, 0.1, 0.03, 1.0, 0)
    b = Detection(0.52, 0.51, 0.1, 0.03, 0.9, 0)
    c = Detection(0.8, 0.5, 0.1, 0.03, 0.9, 0)
    assert _same_line(a, b)
    assert not _same_line(a, c)


def test_iou_of_identical_boxes_is_one():
    a = Detection(0.5, 0.5, 0.2, 0.1, 1.0, 0)
    assert _iou(a, a) == pytest.approx(1.0)


def test_loss_decreases_on_overfit_batch():
    torch.manual_seed(0)
    model = GridDetector(MC)
    x = torch.rand(2, 1, 128, 128)
    boxes = np.array([[0, 0.4, 0.5, 0.1, 0.03125]])
    target = torch.from_numpy(
        np.stack([encode_targets(boxes, MC)] * 2))
    opt = torch.optim.Adam(model.parameters(), lr=1e-3)
    first = None
    for _ in range(30):
        opt.zero_grad()
        loss = detection_loss(model(x), target)
        loss.backward()
        opt.step()
        if first is None:
            first = float(loss.item())
    assert float(loss.item()) < 0.5 * first


def test_loss_handles_empty_target():
    model = GridDetector(MC)
    target = torch.zeros(1, 7, 32, 32)
    target[:, 6] = 1.0
    loss = detection_loss(model(torch.rand(1, 1, 128, 128)), target)
    assert torch.isfinite(loss)


def test_checkpoint_roundtrip(tmp_path):
    model = GridDetector(MC)
    path = str(tmp_path / "m.pt")
    save_checkpoint(model, path, {"recall": 0.5})
    back = load_checkpoint(path)
    assert back.cfg == MC
    x = torch.rand(1, 1, 128, 128)
    model.eval()
    assert torch.allclose(model(x), back(x))
