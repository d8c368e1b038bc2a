"""Binary-classification and oriented-box detection evaluation.

Threshold sweeps (precision/recall/F1/accuracy), ROC and trapezoidal AUC with
tie averaging, percentile severity tables, and AP50 / AP50-95 with greedy
confidence-ordered matching against exact rotated IoU.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .obbgeom import OrientedBox, rotated_iou
from .vegmetric import SEVERITY_LEVELS, classify_severity

logger = logging.getLogger(__name__)

IOU_THRESHOLDS_50_95 = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))


def confusion_at(scores, labels, tau: float) -> tuple[int, int, int, int]:
    """(TP, FP, TN, FN) with predicted-positive defined as score >= tau."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels must have the same length")
    if s.size == 0:
        return (0, 0, 0, 0)
    pred = s >= tau
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    tn = int(np.sum(~pred & ~y))
    fn = int(np.sum(~pred & y))
    return (tp, fp, tn, fn)


@dataclass
class BinaryEvalCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    accuracy: np.ndarray
    roc_points: np.ndarray | None = None   # (k, 2) of (fpr, tpr)
    auc: float | None = None

    @property
    def roc_defined(self) -> bool:
        return self.roc_points is not None


def sweep(scores, labels, grid) -> BinaryEvalCurve:
    """Evaluate the classifier across a threshold grid.

    Precision is 0 where nothing is predicted positive and F1 is 0 where
    P + R = 0. The ROC/AUC part is attached when both classes are present and
    flagged absent (with a warning) otherwise.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    taus = np.sort(np.asarray(grid, dtype=np.float64))
    if taus.size == 0:
        raise ValueError("threshold grid must be non-empty")
    pred = s[None, :] >= taus[:, None]
    tp = (pred & y[None, :]).sum(axis=1).astype(np.float64)
    fp = (pred & ~y[None, :]).sum(axis=1).astype(np.float64)
    fn = (~pred & y[None, :]).sum(axis=1).astype(np.float64)
    tn = (~pred & ~y[None, :]).sum(axis=1).astype(np.float64)
    npos = tp + fp
    precision = np.divide(tp, npos, out=np.zeros_like(tp), where=npos > 0)
    nact = tp + fn
    recall = np.divide(tp, nact, out=np.zeros_like(tp), where=nact > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros_like(tp), where=pr > 0)
    accuracy = (tp + tn) / max(s.size, 1)
    curve = BinaryEvalCurve(taus, precision, recall, f1, accuracy)
    if y.size and y.any() and (~y).any():
        curve.roc_points, curve.auc = roc_auc(s, y)
    else:
        logger.warning("single-class labels: ROC/AUC undefined")
    return curve


def optimal_threshold(curve: BinaryEvalCurve) -> tuple[float, dict]:
    """Threshold with the highest F1; ties resolve to the highest threshold."""
    if curve.thresholds.size == 0:
        raise ValueError("empty curve")
    best = 0
    for i in range(1, curve.thresholds.size):
        if curve.f1[i] >= curve.f1[best]:
            best = i
    metrics = {
        "precision": float(curve.precision[best]),
        "recall": float(curve.recall[best]),
        "f1": float(curve.f1[best]),
        "accuracy": float(curve.accuracy[best]),
    }
    return float(curve.thresholds[best]), metrics


def roc_auc(scores, labels) -> tuple[np.ndarray, float]:
    """ROC points (fpr, tpr) and trapezoidal AUC; requires both classes.

    Tied scores collapse into single ROC points, so the trapezoid rule yields
    AUC = P(s+ > s-) + 0.5 P(s+ = s-).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    npos = int(y.sum())
    nneg = int((~y).sum())
    if npos == 0 or nneg == 0:
        raise ValueError("ROC needs both classes present")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(~y_sorted)
    last_of_group = np.append(s_sorted[1:] != s_sorted[:-1], True)
    tpr = np.concatenate([[0.0], tp[last_of_group] / npos])
    fpr = np.concatenate([[0.0], fp[last_of_group] / nneg])
    auc = float(np.trapezoid(tpr, fpr))
    return np.column_stack([fpr, tpr]), auc


@dataclass
class SeverityTable:
    """Percentile cut points (50th, 75th, 90th) and level classification."""

    cut_points: tuple
    degenerate: bool = False
    levels: tuple = SEVERITY_LEVELS

    def classify(self, metric: float) -> str:
        return classify_severity(metric, self.cut_points)


def severity_table(metrics) -> SeverityTable:
    """Cut points by linear-interpolation percentiles; flags degenerate data."""
    vals = np.asarray(metrics, dtype=np.float64)
    if vals.size < 4:
        raise ValueError("need at least 4 metric values")
    cuts = tuple(float(np.percentile(vals, q)) for q in (50, 75, 90))
    degenerate = not (cuts[0] < cuts[1] < cuts[2])
    if degenerate:
        logger.warning("degenerate metric distribution: non-increasing cut points")
    return SeverityTable(cuts, degenerate)


@dataclass
class DetectionApResult:
    ap_per_iou: dict
    ap50: float
    ap50_95: float
    defined: bool = True


def _average_precision(tp_flags: np.ndarray, npos: int) -> float:
    """Area under the precision envelope over all recall points."""
    if npos == 0:
        return 0.0
    tp_cum = np.cumsum(tp_flags)
    fp_cum = np.cumsum(~tp_flags)
    recall = tp_cum / npos
    precision = tp_cum / np.maximum(tp_cum + fp_cum, 1)
    mrec = np.concatenate([[0.0], recall, [recall[-1] if recall.size else 0.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    for i in range(mpre.size - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    changed = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))


def detection_ap(preds: dict, gts: dict,
                 iou_thresholds=IOU_THRESHOLDS_50_95) -> DetectionApResult:
    """AP for oriented-box detections, all-points interpolation.

    `preds` maps image id -> list of (OrientedBox, confidence); `gts` maps
    image id -> list of OrientedBox. At each IoU threshold, predictions are
    walked in descending confidence and greedily matched to the unmatched
    ground-truth box of highest rotated IoU; a match needs IoU >= threshold.
    With no ground truth anywhere, AP is undefined (NaN, flagged).
    """
    npos = sum(len(v) for v in gts.values())
    if npos == 0:
        logger.warning("no ground-truth boxes: AP undefined")
        nan = float("nan")
        return DetectionApResult({t: nan for t in iou_thresholds}, nan, nan, False)
    flat = []
    for img_id in sorted(preds):
        for box, score in preds[img_id]:
            flat.append((img_id, float(score), box))
    flat.sort(key=lambda rec: -rec[1])
    ious_per_pred = [[rotated_iou(box, g) for g in gts.get(img_id, [])]
                     for img_id, _, box in flat]

    ap_per_iou = {}
    for tau in iou_thresholds:
        used = {img_id: np.zeros(len(gts.get(img_id, [])), dtype=bool)
                for img_id in set(list(preds) + list(gts))}
        tp_flags = np.zeros(len(flat), dtype=bool)
        for idx, (img_id, _, box) in enumerate(flat):
            ious = ious_per_pred[idx]
            best_iou, best_j = 0.0, -1
            for j, iou in enumerate(ious):
                if not used[img_id][j] and iou > best_iou:
                    best_iou, best_j = iou, j
            if best_j >= 0 and best_iou >= tau:
                used[img_id][best_j] = True
                tp_flags[idx] = True
        ap_per_iou[tau] = _average_precision(tp_flags, npos)
    ap50 = ap_per_iou.get(0.5, float("nan"))
    ap50_95 = float(np.mean([ap_per_iou[t] for t in iou_thresholds]))
    return DetectionApResult(ap_per_iou, ap50, ap50_95, True)
