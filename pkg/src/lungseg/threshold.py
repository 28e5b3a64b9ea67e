"""Histogram thresholding pipeline for lung parenchyma extraction.

The selection rule maximizes the between-class variance of the intensity
histogram.  Because the parenchyma is darker than the surrounding
tissue, the threshold test is reversed: pixels at or below the threshold
become foreground.
"""

from __future__ import annotations

import numpy as np

from lungseg.image import (
    MAX_LEVEL,
    apply_mask,
    as_gray,
    clear_border_objects,
    connected_components,
    fill_holes,
    histogram,
    median_filter,
    select_lung_regions,
)
from lungseg.morphology import BorderCorrection, apply_border_correction
from lungseg.results import SegmentationResult


def otsu_threshold(hist) -> int:
    """Threshold maximizing between-class variance; smallest wins on ties.

    Classes are {v <= t} and {v > t}; candidate t runs to one below the
    top bin.  Counts and first moments accumulate exactly in int64, so
    tied scores are tied bit-for-bit and the smallest t is returned.
    """
    h = np.asarray(hist, dtype=np.int64)
    if h.ndim != 1 or h.size < 2:
        raise ValueError("histogram must be a 1-d array with at least 2 bins")
    if (h < 0).any():
        raise ValueError("histogram counts must be non-negative")
    if np.count_nonzero(h) < 2:
        raise ValueError("degenerate histogram")
    values = np.arange(h.size, dtype=np.int64)
    w0 = np.cumsum(h)
    s0 = np.cumsum(values * h)
    total = w0[-1]
    s_total = s0[-1]
    w0t = w0[:-1]
    w1t = total - w0t
    valid = (w0t > 0) & (w1t > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = s0[:-1] / w0t
        mu1 = (s_total - s0[:-1]) / w1t
        score = w0t.astype(np.float64) * w1t.astype(np.float64) * (mu0 - mu1) ** 2
    score = np.where(valid, score, -1.0)
    return int(np.argmax(score))


def reverse_threshold(img, threshold: int, max_level: int = MAX_LEVEL) -> np.ndarray:
    """Foreground where the image is at or below the threshold."""
    arr = as_gray(img, max_level)
    if not 0 <= threshold <= max_level:
        raise ValueError(f"threshold must lie in [0, {max_level}]")
    return arr <= threshold


def threshold_segment(
    img,
    correction: BorderCorrection | None = None,
    max_level: int = MAX_LEVEL,
) -> SegmentationResult:
    """Full thresholding pipeline from raw slice to parenchyma image.

    Stages: reversed Otsu threshold, median smoothing of the mask,
    removal of frame-connected background, lung region selection, hole
    filling, border correction, masking of the input.
    """
    if correction is None:
        correction = BorderCorrection()
    arr = as_gray(img, max_level)
    t = otsu_threshold(histogram(arr, max_level))
    raw = reverse_threshold(arr, t, max_level)
    smoothed = median_filter(raw * float(max_level), 3) > 0
    cleared = clear_border_objects(smoothed)
    selected = select_lung_regions(connected_components(cleared, 8))
    filled = fill_holes(selected)
    corrected = apply_border_correction(arr, filled, correction)
    parenchyma = apply_mask(arr, corrected)
    return SegmentationResult(
        mask=corrected,
        parenchyma=parenchyma,
        threshold=float(t),
        stages=[
            ("input", arr.copy()),
            ("reverse_threshold", raw),
            ("median_filter", smoothed),
            ("background_removal", filled),
            ("mask_after_correction", corrected),
            ("parenchyma", parenchyma),
        ],
    )
