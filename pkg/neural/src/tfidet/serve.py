"""Wire-protocol inference endpoint.

Request: an image path, either as a final argv argument or as a stdin line
``IMG <path>``.  Response: one JSON record per detected box with keys
x_min, x_max, y_min, y_max (pixels, top-origin y), confidence, label,
terminated by a line ``END``.  A malformed request or unreadable image
yields an error record followed by ``END``; the stdin loop stays alive.
"""

from __future__ import annotations

import json
import sys
from typing import List, Optional, TextIO

import torch

from .data import load_image
from .model import Detection, GridDetector, decode_predictions


def detect_file(model: GridDetector, path: str,
                conf_threshold: float = 0.5) -> List[dict]:
    """Run inference on one image file, returning wire-format records."""
    from PIL import Image

    with Image.open(path) as img:
        side_x, side_y = img.size
    if side_x != side_y:
        raise ValueError(f"expected a square image, got {side_x}x{side_y}")
    pixels = load_image(path, model.cfg.side)
    with torch.no_grad():
        pred = model(torch.from_numpy(pixels)[None, None])[0]
    detections = decode_predictions(pred, model.cfg, conf_threshold)
    return [_to_record(d, side_x, model.cfg.class_names) for d in detections]


def _to_record(det: Detection, l: int, class_names) -> dict:
    x_min = max(0.0, (det.x_center - det.width / 2) * l)
    x_max = min(float(l), (det.x_center + det.width / 2) * l)
    y_min = max(0.0, (det.y_center - det.height / 2) * l)
    y_max = min(float(l), (det.y_center + det.height / 2) * l)
    return {
        "x_min": x_min, "x_max": x_max, "y_min": y_min, "y_max": y_max,
        "confidence": det.confidence,
        "label": class_names[det.class_id]
        if det.class_id < len(class_names) else str(det.class_id),
    }


def _respond(out: TextIO, records: List[dict]) -> None:
    for rec in records:
        out.write(json.dumps(rec, sort_keys=True) + "\n")
    out.write("END\n")
    out.flush()


def _handle(model: GridDetector, path: str, out: TextIO,
            conf_threshold: float) -> None:
    try:
        records = detect_file(model, path, conf_threshold)
    except Exception as exc:
        _respond(out, [{"error": str(exc)}])
        return
    _respond(out, records)


def serve(model: GridDetector, image_path: Optional[str] = None,
          stdin: TextIO = sys.stdin, stdout: TextIO = sys.stdout,
          conf_threshold: float = 0.5) -> int:
    """Answer one argv request, or loop over stdin IMG lines."""
    if image_path is not None:
        _handle(model, image_path, stdout, conf_threshold)
        return 0
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        if line == "QUIT":
            break
        if not line.startswith("IMG "):
            _respond(stdout, [{"error": f"malformed request: {line!r}"}])
            continue
        _handle(model, line[4:].strip(), stdout, conf_threshold)
    return 0
