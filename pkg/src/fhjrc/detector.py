"""Sub-pulse localization in resized time-frequency images.

The built-in classical detector thresholds, labels 8-connected components,
merges split line fragments, and keeps the expected number of horizontal
line components.  An external detector (e.g. a trained neural model) can be
swapped in through a newline-delimited subprocess protocol; both produce the
same bottom-origin BoundingBox records.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .tfa import TimeFrequencyImage
from .waveform import PulseSymbol, WaveformConfig, WindowOverflowError


class DetectionErasureError(ValueError):
    """Fewer components found than sub-pulses expected."""


class ProtocolError(RuntimeError):
    """External detector emitted a malformed or out-of-range record."""


class DetectorUnavailableError(RuntimeError):
    """External detector exited nonzero or timed out."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in resized-image pixels, bottom-origin y."""
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    confidence: float = 1.0
    label: str = "signal"

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("degenerate bounding box")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def y_center(self) -> float:
        return 0.5 * (self.y_min + self.y_max)


@dataclass(frozen=True)
class ClassicalDetectorParams:
    """Thresholding/filter knobs, tuned to the default CWD profile."""
    peak_fraction: float = 0.2
    area_min: int = 25
    aspect_max: float = 1.0
    merge_overlap: float = 0.8
    merge_row_gap: int = 2
    edge_fraction: float = 0.25
    valley_fraction: float = 0.5
    speck_area: int = 4


def otsu_threshold(values: np.ndarray, bins: int = 256) -> float:
    """Classic between-class-variance maximizing threshold."""
    hist, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    hist = hist.astype(np.float64)
    total = hist.sum()
    if total == 0:
        return 0.0
    centers = 0.5 * (edges[:-1] + edges[1:])
    w0 = np.cumsum(hist)
    w1 = total - w0
    m0 = np.cumsum(hist * centers)
    m_total = m0[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = m0 / w0
        mu1 = (m_total - m0) / w1
        var_between = w0 * w1 * (mu0 - mu1) ** 2
    var_between[~np.isfinite(var_between)] = -1.0
    return float(centers[int(np.argmax(var_between))])


def _x_overlap(a: Tuple[int, int], b: Tuple[int, int]) -> float:
    lo = max(a[0], b[0])
    hi = min(a[1], b[1])
    if hi <= lo:
        return 0.0
    return (hi - lo) / min(a[1] - a[0], b[1] - b[0])


def detect_classical(img: TimeFrequencyImage, expected_count: int,
                     params: ClassicalDetectorParams = ClassicalDetectorParams(),
                     label: str = "signal") -> List[BoundingBox]:
    """Localize the expected_count sub-pulse lines in a normalized image.

    Deterministic: threshold at max(otsu, peak_fraction * max), label
    8-connected components, merge fragments of the same line (x overlap >=
    merge_overlap, row gap <= merge_row_gap), drop small or tall components,
    keep the expected_count largest, and report them left to right.  Box
    edges are refined per component at edge_fraction of its peak so the
    reported extent tracks the sub-pulse rather than the kernel's skirt.
    """
    pix = img.pixels
    peak = pix.max()
    if peak <= 0.0:
        raise DetectionErasureError("silent image contains no components")
    theta = max(otsu_threshold(pix[pix > 0]), params.peak_fraction * peak)
    mask = pix >= theta
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    comps = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None or areas[idx] < params.speck_area:
            continue
        rs, cs = sl
        comps.append([rs.start, rs.stop, cs.start, cs.stop, False, False])

    # merge fragments belonging to one horizontal line; passes repeat until
    # stable so chains of fragments coalesce
    changed = True
    while changed:
        changed = False
        out: List[List] = []
        for b in comps:
            for a in out:
                gap = max(a[0], b[0]) - min(a[1], b[1])
                if gap <= params.merge_row_gap and \
                        _x_overlap((a[2], a[3]), (b[2], b[3])) >= params.merge_overlap:
                    a[0] = min(a[0], b[0])
                    a[1] = max(a[1], b[1])
                    a[2] = min(a[2], b[2])
                    a[3] = max(a[3], b[3])
                    a[4] = a[4] or b[4]
                    a[5] = a[5] or b[5]
                    changed = True
                    break
            else:
                out.append(list(b))
        comps = out

    # split components bridging two same-frequency sub-pulses: the smoothing
    # window and the same-row cross-term can fill a short gap, but only up
    # to a fraction of the line intensity, leaving a pronounced valley
    split = []
    for comp in comps:
        split.extend(_split_at_valleys(pix, mask, comp, params.valley_fraction))
    comps = split

    survivors = []
    for r0, r1, c0, c1, left_cut, right_cut in comps:
        area = int(np.count_nonzero(mask[r0:r1, c0:c1]))
        height, width_ = r1 - r0, c1 - c0
        if area < params.area_min or height / width_ > params.aspect_max:
            continue
        survivors.append((area, r0, r1, c0, c1, left_cut, right_cut))
    if len(survivors) < expected_count:
        raise DetectionErasureError(
            f"found {len(survivors)} components, expected {expected_count}")
    survivors.sort(key=lambda t: -t[0])
    survivors = survivors[:expected_count]
    survivors.sort(key=lambda t: t[3])

    boxes = []
    row_spans = []
    for _, r0, r1, c0, c1, left_cut, right_cut in survivors:
        region = pix[r0:r1, c0:c1]
        x0, x1, y0, y1 = _refine_extent(region, params.edge_fraction)
        boxes.append(BoundingBox(
            x_min=float(c0 + x0), x_max=float(c0 + x1),
            y_min=float(r0 + y0), y_max=float(r0 + y1),
            confidence=float(region.mean()), label=label))
        row_spans.append((r0 + y0, r0 + y1))
    return _snap_to_boundaries(pix, boxes, row_spans)


def _dominance_boundary(pix: np.ndarray, a: BoundingBox, b: BoundingBox,
                        a_rows: Tuple[float, float], b_rows: Tuple[float, float],
                        pad: int = 6) -> float:
    """Hand-over column between two consecutive sub-pulse boxes.

    Scans the columns around the nominal boundary and splits where the
    stronger intensity switches from a's rows to b's rows.  This stays
    correct when a cross-term bridge stretches one box's thresholded
    extent under its neighbor, where a plain midpoint would not.
    """
    lo = int(np.floor(min(a.x_max, b.x_min))) - pad
    hi = int(np.ceil(max(a.x_max, b.x_min))) + pad
    lo = max(lo, int(a.x_min) + 1)
    hi = min(hi, int(np.ceil(b.x_max)) - 1, pix.shape[1])
    if hi <= lo:
        return 0.5 * (a.x_max + b.x_min)
    ar0, ar1 = int(a_rows[0]), max(int(np.ceil(a_rows[1])), int(a_rows[0]) + 1)
    br0, br1 = int(b_rows[0]), max(int(np.ceil(b_rows[1])), int(b_rows[0]) + 1)
    prof_a = pix[ar0:ar1, lo:hi].max(axis=0)
    prof_b = pix[br0:br1, lo:hi].max(axis=0)
    a_wins = prof_a >= prof_b
    # split minimizing misclassified columns (b-dominant left + a-dominant right)
    b_left = np.concatenate(([0], np.cumsum(~a_wins)))
    a_right = np.concatenate(([0], np.cumsum(a_wins[::-1])))[::-1]
    cost = b_left + a_right
    best = np.flatnonzero(cost == cost.min())
    mid = 0.5 * (a.x_max + b.x_min) - lo
    k = best[np.argmin(np.abs(best - mid))]
    return float(lo + k)


def _snap_to_boundaries(pix: np.ndarray, boxes: List[BoundingBox],
                        row_spans: List[Tuple[float, float]]) -> List[BoundingBox]:
    """Exploit sub-pulse contiguity to undo the line-taper width bias.

    The distribution's line intensity tapers toward each segment end, so a
    thresholded extent under-covers the sub-pulse symmetrically; cross-term
    bridges can conversely over-extend it.  Adjacent sub-pulses share a
    boundary, recovered per pair by the row-dominance switch.  The two
    outer edges have no neighbor; they are already calibrated by the
    edge-fraction refinement and are only nudged outward by the shrinkage
    seen on the box's interior side.
    """
    if len(boxes) < 2:
        return boxes
    bounds = [
        _dominance_boundary(pix, a, b, row_spans[i], row_spans[i + 1])
        for i, (a, b) in enumerate(zip(boxes, boxes[1:]))]
    first_shrink = np.clip(bounds[0] - boxes[0].x_max, 0.0, 3.0)
    last_shrink = np.clip(boxes[-1].x_min - bounds[-1], 0.0, 3.0)
    left = max(boxes[0].x_min - first_shrink, 0.0)
    right = min(boxes[-1].x_max + last_shrink, float(pix.shape[1]))
    edges = [left] + bounds + [right]
    # noise can drive a dominance boundary past its neighbors; keep the
    # original extents rather than emit a crossed box
    if any(b - a < 1.0 for a, b in zip(edges, edges[1:])):
        return boxes
    return [
        BoundingBox(x_min=edges[i], x_max=edges[i + 1],
                    y_min=b.y_min, y_max=b.y_max,
                    confidence=b.confidence, label=b.label)
        for i, b in enumerate(boxes)]


def _split_at_valleys(pix: np.ndarray, mask: np.ndarray, comp: Sequence[int],
                      valley_fraction: float) -> List[List[int]]:
    """Recursively split a component at its deepest qualifying valley.

    A column whose profile falls below valley_fraction of both flanking
    peaks separates two sub-pulses that the threshold mask bridged.
    """
    r0, r1, c0, c1, left_cut, right_cut = comp
    profile = pix[r0:r1, c0:c1].max(axis=0)
    best_i, best_v = -1, np.inf
    for i in range(1, profile.size - 1):
        v = profile[i]
        if v >= best_v:
            continue
        if v < valley_fraction * min(profile[:i].max(), profile[i + 1:].max()):
            best_i, best_v = i, v
    if best_i < 0:
        return [list(comp)]
    # drop the whole sub-threshold valley span: the bridge belongs to the
    # hop occupying the gap (at another row), not to either neighbor
    thr = valley_fraction * min(profile[:best_i].max(), profile[best_i + 1:].max())
    lo_i = best_i
    while lo_i > 0 and profile[lo_i - 1] < thr:
        lo_i -= 1
    hi_i = best_i
    while hi_i < profile.size - 1 and profile[hi_i + 1] < thr:
        hi_i += 1
    out = []
    for lo, hi, flags in ((c0, c0 + lo_i, (left_cut, True)),
                          (c0 + hi_i + 1, c1, (True, right_cut))):
        sub = mask[r0:r1, lo:hi]
        rows = np.flatnonzero(sub.any(axis=1))
        cols = np.flatnonzero(sub.any(axis=0))
        if rows.size == 0 or cols.size == 0:
            continue
        part = [r0 + rows[0], r0 + rows[-1] + 1,
                lo + cols[0], lo + cols[-1] + 1, flags[0], flags[1]]
        out.extend(_split_at_valleys(pix, mask, part, valley_fraction))
    return out


def _refine_extent(region: np.ndarray, frac: float) -> Tuple[int, int, int, int]:
    """Tighten a component box to where its profile exceeds frac * peak."""
    col_profile = region.max(axis=0)
    row_profile = region.max(axis=1)
    cthr = frac * col_profile.max()
    rthr = frac * row_profile.max()
    cols = np.flatnonzero(col_profile >= cthr)
    rows = np.flatnonzero(row_profile >= rthr)
    return int(cols[0]), int(cols[-1]) + 1, int(rows[0]), int(rows[-1]) + 1


def ground_truth_boxes(symbol: PulseSymbol, start: int, cfg: WaveformConfig,
                       l: int, h_box: Optional[float] = None,
                       label: str = "signal") -> List[BoundingBox]:
    """Annotation boxes: the exact inverse of the box-to-parameter mapping."""
    if h_box is None:
        h_box = l / 32.0
    seg_lens = [cfg.segment_samples(d) for d in symbol.dur_indices]
    if start < 0 or start + sum(seg_lens) > cfg.n_s:
        raise WindowOverflowError("pulse does not fit the window at this start")
    boxes = []
    offset = start
    for f_idx, seg_len in zip(symbol.freq_indices, seg_lens):
        x_min = l * offset / cfg.n_s
        x_max = x_min + l * seg_len / cfg.n_s
        y_center = 2.0 * l * (f_idx * cfg.f_f) / cfg.sample_rate
        boxes.append(BoundingBox(
            x_min=x_min, x_max=x_max,
            y_min=y_center - h_box / 2.0, y_max=y_center + h_box / 2.0,
            confidence=1.0, label=label))
        offset += seg_len
    return boxes


def parse_protocol_response(lines: Sequence[str], l: int) -> List[BoundingBox]:
    """Parse wire records (top-origin y) into bottom-origin boxes."""
    boxes = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        if line == "END":
            break
        try:
            rec = json.loads(line)
            x_min = float(rec["x_min"])
            x_max = float(rec["x_max"])
            y_min_top = float(rec["y_min"])
            y_max_top = float(rec["y_max"])
            confidence = float(rec["confidence"])
            box_label = str(rec["label"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed detector record: {line!r}") from exc
        if not (0.0 <= x_min < x_max <= l and 0.0 <= y_min_top < y_max_top <= l):
            raise ProtocolError(f"out-of-range detector record: {line!r}")
        if not 0.0 <= confidence <= 1.0:
            raise ProtocolError(f"confidence outside [0, 1]: {line!r}")
        boxes.append(BoundingBox(
            x_min=x_min, x_max=x_max,
            y_min=l - y_max_top, y_max=l - y_min_top,
            confidence=confidence, label=box_label))
    else:
        raise ProtocolError("detector response not terminated by END")
    return sorted(boxes, key=lambda b: b.x_min)


def external_detect(img_path: str, command: Sequence[str], l: int,
                    timeout: float = 30.0) -> List[BoundingBox]:
    """Run one external-detector request over the line protocol.

    The image path is passed both as an argv argument and as an
    ``IMG <path>`` stdin header; the responder may honor either.
    """
    try:
        proc = subprocess.run(
            list(command) + [img_path],
            input=f"IMG {img_path}\n", capture_output=True,
            text=True, timeout=timeout)
    except (subprocess.TimeoutExpired, OSError) as exc:
        raise DetectorUnavailableError(f"external detector failed: {exc}") from exc
    if proc.returncode != 0:
        raise DetectorUnavailableError(
            f"external detector exited {proc.returncode}: {proc.stderr.strip()}")
    return parse_protocol_response(proc.stdout.splitlines(), l)
