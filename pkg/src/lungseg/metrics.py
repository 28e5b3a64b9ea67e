"""Overlap and boundary-distance metrics for binary segmentations.

Both sensitivity-style ratios are provided under unambiguous names:
``recall`` is TP/(TP+FN) and ``precision`` is TP/(TP+FP).  Evaluation
output reports both so either convention can be compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lungseg import kernels
from lungseg.image import as_mask


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int


def confusion_counts(pred, truth) -> ConfusionCounts:
    """Pixelwise confusion tallies between prediction and ground truth."""
    p = as_mask(pred)
    t = as_mask(truth)
    if p.shape != t.shape:
        raise ValueError("shape mismatch between prediction and truth")
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = p.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def dsc(pred, truth) -> float:
    """Dice similarity 2TP/(2TP+FP+FN); two empty masks score 1.0."""
    c = confusion_counts(pred, truth)
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        return 1.0
    return 2.0 * c.tp / denom


def specificity(pred, truth) -> float:
    """TN/(TN+FP); requires the truth to contain background."""
    c = confusion_counts(pred, truth)
    denom = c.tn + c.fp
    if denom == 0:
        raise ValueError("no negatives in truth")
    return c.tn / denom


def recall(pred, truth) -> float:
    """TP/(TP+FN), the fraction of truth recovered (textbook sensitivity)."""
    c = confusion_counts(pred, truth)
    denom = c.tp + c.fn
    if denom == 0:
        raise ValueError("no positives in truth")
    return c.tp / denom


def precision(pred, truth) -> float:
    """TP/(TP+FP), the fraction of the prediction that is correct."""
    c = confusion_counts(pred, truth)
    denom = c.tp + c.fp
    if denom == 0:
        raise ValueError("no positives in prediction")
    return c.tp / denom


def boundary_points(mask) -> np.ndarray:
    """(row, col) points of foreground pixels on the region boundary.

    A foreground pixel is a boundary point when it touches background
    through a 4-neighbour or lies on the image frame.
    """
    arr = as_mask(mask)
    if not arr.any():
        raise ValueError("empty mask")
    interior = np.zeros_like(arr)
    interior[1:-1, 1:-1] = (
        arr[1:-1, 1:-1]
        & arr[:-2, 1:-1]
        & arr[2:, 1:-1]
        & arr[1:-1, :-2]
        & arr[1:-1, 2:]
    )
    rows, cols = np.nonzero(arr & ~interior)
    return np.stack([rows, cols], axis=1).astype(np.int64)


def directed_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """max over ``a`` of the Euclidean distance to the nearest point of ``b``."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty point set")
    return float(kernels.active().directed_hausdorff(a, b))


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance in pixel units."""
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))
