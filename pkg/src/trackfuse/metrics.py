"""Segmentation and detection evaluation.

Segmentation metrics are semantic: all instances of a frame are
flattened into one foreground mask before scoring.  Dice of two empty
frames is 1.0 so that correctly empty frames of untrimmed videos are
rewarded; by default, though, aggregation runs in positives-only mode
(frames with non-empty ground truth) for comparability.  Temporal
consistency is the mean warp-aligned Dice of consecutive predictions;
it never looks at ground truth.

Detection metrics convert masks to their tightest boxes and score
greedy score-ranked one-to-one matching: F1 at IoU 0.5, average
precision with all-point interpolation at 0.5 and averaged over
0.50:0.05:0.95.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch
from .masks import BBox, Mask, SegmentSet, rle_encode, tightest_bbox
from .warp import SyntheticWarpPropagator, WarpField


@dataclass(frozen=True)
class SegScores:
    dice: Optional[float]
    iou: Optional[float]
    mae: Optional[float]
    tc: Optional[float]

    def to_json(self) -> dict:
        return {"dice": self.dice, "iou": self.iou, "mae": self.mae, "tc": self.tc}


@dataclass(frozen=True)
class DetScores:
    f1_50: float
    ap_50: float
    ap_50_95: float

    def to_json(self) -> dict:
        return {"f1_50": self.f1_50, "ap_50": self.ap_50, "ap_50_95": self.ap_50_95}


def foreground(seg_set: SegmentSet) -> Optional[Mask]:
    """Union of a frame's instances; None when the frame is empty."""
    masks = [m for m in seg_set.segments if not m.is_empty()]
    if not masks:
        return None
    acc = np.zeros((masks[0].height, masks[0].width), dtype=bool)
    for m in masks:
        acc |= m.to_array()
    return rle_encode(acc)


def _counts(pred: Optional[Mask], gt: Optional[Mask]) -> tuple[int, int, int, int]:
    """(intersection, pred area, gt area, frame pixels); 0 pixels if both empty."""
    if pred is not None and gt is not None:
        if not pred.same_shape(gt):
            raise DimensionMismatch(
                f"pred {pred.width}x{pred.height} vs gt {gt.width}x{gt.height}"
            )
        inter = int(np.count_nonzero(pred.to_array() & gt.to_array()))
        return inter, pred.area, gt.area, pred.width * pred.height
    if pred is not None:
        return 0, pred.area, 0, pred.width * pred.height
    if gt is not None:
        return 0, 0, gt.area, gt.width * gt.height
    return 0, 0, 0, 0


def frame_dice(pred: Optional[Mask], gt: Optional[Mask]) -> float:
    """Semantic Dice; two empty frames score 1.0."""
    inter, pa, ga, _ = _counts(pred, gt)
    if pa + ga == 0:
        return 1.0
    return 2.0 * inter / (pa + ga)


def frame_iou(pred: Optional[Mask], gt: Optional[Mask]) -> float:
    inter, pa, ga, _ = _counts(pred, gt)
    uni = pa + ga - inter
    if uni == 0:
        return 1.0
    return inter / uni


def mae(pred: Optional[Mask], gt: Optional[Mask]) -> float:
    """Mean pixel-wise absolute difference of the binary maps."""
    inter, pa, ga, pixels = _counts(pred, gt)
    if pixels == 0:
        return 0.0
    return (pa + ga - 2 * inter) / pixels


def temporal_consistency(
    preds: Sequence[Optional[Mask]], warps: Sequence[WarpField]
) -> Optional[float]:
    """Mean Dice between each warped prediction and its successor.

    Undefined (None) for single-frame videos.  ``warps`` must cover every
    consecutive frame pair.
    """
    n = len(preds)
    if n < 2:
        return None
    prop = SyntheticWarpPropagator(warps)
    scores = []
    for f in range(n - 1):
        cur = preds[f]
        moved = None if cur is None else prop.align_to_reference(cur, f, f + 1)
        scores.append(frame_dice(moved, preds[f + 1]))
    return float(np.mean(scores))


def video_seg_scores(
    preds: Sequence[SegmentSet],
    gts: Sequence[SegmentSet],
    warps: Optional[Sequence[WarpField]] = None,
    *,
    positives_only: bool = True,
) -> SegScores:
    """Aggregate semantic scores over a video.

    Dice/IoU/MAE average over scored frames (positives-only by default);
    they come out None when no frame qualifies.  TC is computed over all
    consecutive pairs whenever warps are supplied.
    """
    if len(preds) != len(gts):
        raise ValueError(f"pred/gt frame counts differ: {len(preds)} vs {len(gts)}")
    pred_fg = [foreground(s) for s in preds]
    gt_fg = [foreground(s) for s in gts]
    dices, ious, maes = [], [], []
    for p, g in zip(pred_fg, gt_fg):
        if positives_only and g is None:
            continue
        dices.append(frame_dice(p, g))
        ious.append(frame_iou(p, g))
        maes.append(mae(p, g))
    tc = temporal_consistency(pred_fg, warps) if warps is not None else None
    if not dices:
        return SegScores(None, None, None, tc)
    return SegScores(float(np.mean(dices)), float(np.mean(ious)), float(np.mean(maes)), tc)


def box_iou(a: BBox, b: BBox) -> float:
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min) + 1
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min) + 1
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def _frame_boxes(seg_set: SegmentSet) -> tuple[list[BBox], list[float]]:
    boxes, scores = [], []
    for m, s in zip(seg_set.segments, seg_set.effective_scores()):
        box = tightest_bbox(m)
        if box is not None:
            boxes.append(box)
            scores.append(s)
    return boxes, scores


def _match_frame(
    boxes: Sequence[BBox], scores: Sequence[float], gt_boxes: Sequence[BBox], tau: float
) -> list[bool]:
    """Greedy TP flags per prediction: score descending, best IoU >= tau."""
    order = sorted(range(len(boxes)), key=lambda i: (-scores[i], i))
    taken = [False] * len(gt_boxes)
    tp = [False] * len(boxes)
    for i in order:
        best, best_iou = -1, 0.0
        for g, gt_box in enumerate(gt_boxes):
            if taken[g]:
                continue
            v = box_iou(boxes[i], gt_box)
            if v >= tau and v > best_iou:
                best, best_iou = g, v
        if best >= 0:
            taken[best] = True
            tp[i] = True
    return tp


def _average_precision(flags: Sequence[tuple[float, int, int, bool]], num_gt: int) -> float:
    """All-point interpolated AP from (score, frame, idx, is_tp) records."""
    if num_gt == 0:
        return 1.0 if not flags else 0.0
    if not flags:
        return 0.0
    ordered = sorted(flags, key=lambda r: (-r[0], r[1], r[2]))
    tp_cum = np.cumsum([1 if r[3] else 0 for r in ordered])
    fp_cum = np.cumsum([0 if r[3] else 1 for r in ordered])
    recall = tp_cum / num_gt
    precision = tp_cum / (tp_cum + fp_cum)
    # Precision envelope from the right, then sum recall increments.
    env = np.maximum.accumulate(precision[::-1])[::-1]
    prev_r = 0.0
    ap = 0.0
    for r, p in zip(recall, env):
        ap += (r - prev_r) * p
        prev_r = r
    return float(ap)


def detection_scores(
    preds: Sequence[SegmentSet], gts: Sequence[SegmentSet]
) -> DetScores:
    """Box-level F1@0.5, AP@0.5, and AP averaged over 0.50:0.05:0.95."""
    if len(preds) != len(gts):
        raise ValueError(f"pred/gt frame counts differ: {len(preds)} vs {len(gts)}")
    per_frame = []
    num_gt = 0
    for pred, gt in zip(preds, gts):
        boxes, scores = _frame_boxes(pred)
        gt_boxes, _ = _frame_boxes(gt)
        per_frame.append((boxes, scores, gt_boxes))
        num_gt += len(gt_boxes)

    taus = [0.5 + 0.05 * k for k in range(10)]
    aps = []
    f1_50 = 0.0
    for tau in taus:
        records = []
        tp_total = 0
        fp_total = 0
        for frame, (boxes, scores, gt_boxes) in enumerate(per_frame):
            tp = _match_frame(boxes, scores, gt_boxes, tau)
            for idx, flag in enumerate(tp):
                records.append((scores[idx], frame, idx, flag))
            tp_total += sum(tp)
            fp_total += len(tp) - sum(tp)
        aps.append(_average_precision(records, num_gt))
        if tau == 0.5:
            fn_total = num_gt - tp_total
            denom = 2 * tp_total + fp_total + fn_total
            f1_50 = 1.0 if denom == 0 else 2 * tp_total / denom
    return DetScores(f1_50=f1_50, ap_50=aps[0], ap_50_95=float(np.mean(aps)))


def count_fp_instance_frames(
    preds: Sequence[SegmentSet], gts: Sequence[SegmentSet], iou_min: float = 0.1
) -> int:
    """Predicted instance-frames whose mask matches no ground-truth instance.

    A prediction counts as false positive on a frame when its IoU with
    every ground-truth instance of that frame is at most ``iou_min``.
    """
    from .masks import iou as mask_iou

    count = 0
    for pred, gt in zip(preds, gts):
        for m in pred.segments:
            if m.is_empty():
                continue
            if all(mask_iou(m, g) <= iou_min for g in gt.segments):
                count += 1
    return count
