"""Localization and segmentation metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np


@dataclass
class MetricsReport:
    """Dataset-level scores. ``None`` means not applicable or no ground truth."""

    pixel_ap: Optional[float] = None
    jaccard_iou: Optional[float] = None
    corloc: Optional[float] = None
    mean_box_iou: Optional[float] = None
    objective: Optional[float] = None
    relaxed_objective: Optional[float] = None
    gap: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def box_iou(a: Sequence[float], b: Sequence[float]) -> float:
    """IoU of two [x, y, w, h] rectangles."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    ih = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = iw * ih
    union = aw * ah + bw * bh - inter
    if union <= 0:
        return 1.0 if tuple(a) == tuple(b) else 0.0
    return inter / union


def corloc(preds, gts) -> float:
    """Fraction of images whose predicted box has IoU strictly above 0.5."""
    if len(preds) != len(gts):
        raise ValueError("prediction and ground-truth lists differ in length")
    if not preds:
        raise ValueError("empty prediction list")
    return float(np.mean([box_iou(p, g) > 0.5 for p, g in zip(preds, gts)]))


def mean_box_iou(preds, gts) -> float:
    return float(np.mean([box_iou(p, g) for p, g in zip(preds, gts)]))


def pixel_metrics(labeling, instances) -> tuple[float, float]:
    """(pixel accuracy, foreground Jaccard), micro-averaged over all pixels of the set."""
    if not instances.has_superpixel_gt():
        raise ValueError("superpixel ground truth missing")
    pixels = np.array([sp.pixel_count for im in instances.images for sp in im.superpixels], dtype=float)
    gt = np.array([bool(sp.gt_foreground) for im in instances.images for sp in im.superpixels])
    pred = labeling.foreground().astype(bool)
    if pred.shape != gt.shape:
        raise ValueError(f"labeling covers {pred.size} superpixels, instance has {gt.size}")
    ap = pixels[pred == gt].sum() / pixels.sum()
    union = pixels[pred | gt].sum()
    jaccard = pixels[pred & gt].sum() / union if union > 0 else 1.0
    return float(ap), float(jaccard)


def chosen_rects(labeling, instances) -> list:
    return [im.boxes[k].rect for im, k in zip(instances.images, labeling.chosen_box)]


def evaluate(labeling, instances) -> MetricsReport:
    """Every metric the labeling and the available ground truth support."""
    report = MetricsReport()
    if all(k is not None for k in labeling.chosen_box) and instances.has_box_gt():
        preds = chosen_rects(labeling, instances)
        gts = [im.gt_box for im in instances.images]
        report.corloc = corloc(preds, gts)
        report.mean_box_iou = mean_box_iou(preds, gts)
    if all(l is not None for l in labeling.labels) and instances.has_superpixel_gt():
        report.pixel_ap, report.jaccard_iou = pixel_metrics(labeling, instances)
    return report
