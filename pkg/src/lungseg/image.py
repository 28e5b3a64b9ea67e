"""Core image types and operations shared by every segmentation pipeline.

Grayscale slices are plain 2-d float64 arrays with intensities in
``[0, max_level]`` (8-bit scale by default); binary masks are 2-d bool
arrays of the same shape.  The helpers below validate those conventions
at the public entry points so the rest of the package can assume them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lungseg import kernels

MAX_LEVEL = 255


@dataclass(frozen=True)
class LabeledImage:
    """Connected-component labels plus the number of components.

    ``labels`` holds 0 for background and 1..component_count for
    foreground components, numbered in first-encounter raster order.
    """

    labels: np.ndarray
    component_count: int


def as_gray(img, max_level: int = MAX_LEVEL) -> np.ndarray:
    """Validate and return a grayscale slice as a float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(arr)):
        raise ValueError("intensities must be finite")
    if arr.min() < 0 or arr.max() > max_level:
        raise ValueError(f"intensities must lie in [0, {max_level}]")
    return arr


def as_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.dtype != np.bool_:
        raise ValueError("mask must be boolean")
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("empty input")
    return arr


def histogram(img, max_level: int = MAX_LEVEL) -> np.ndarray:
    """Intensity histogram with ``max_level + 1`` bins.

    Non-integer intensities are assigned to the nearest integer bin.
    """
    arr = as_gray(img, max_level)
    idx = np.clip(np.rint(arr), 0, max_level).astype(np.intp)
    return np.bincount(idx.ravel(), minlength=max_level + 1).astype(np.int64)


def median_filter(img, window: int) -> np.ndarray:
    """Square median filter; borders replicate the nearest edge pixel.

    ``window`` must be odd and no larger than either image dimension.
    A window of 1 is the identity.
    """
    arr = as_gray(img)
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd")
    if window > min(arr.shape):
        raise ValueError("window exceeds image extent")
    return kernels.active().median_filter(arr, window)


def invert(mask) -> np.ndarray:
    return ~as_mask(mask)


def connected_components(mask, connectivity: int = 8) -> LabeledImage:
    """Label foreground components under 4- or 8-connectivity."""
    arr = as_mask(mask)
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    labels, count = kernels.active().label_components(arr, connectivity)
    return LabeledImage(labels=labels, component_count=count)


def fill_holes(mask) -> np.ndarray:
    """Fill background regions not connected (4-connectivity) to the frame."""
    arr = as_mask(mask)
    background = ~arr
    lab = kernels.active().label_components(background, 4)[0]
    border = np.zeros(lab.max() + 1, dtype=bool)
    for edge in (lab[0], lab[-1], lab[:, 0], lab[:, -1]):
        border[np.unique(edge)] = True
    border[0] = True
    return arr | ~border[lab]


def clear_border_objects(mask) -> np.ndarray:
    """Remove 8-connected foreground components that touch the frame."""
    arr = as_mask(mask)
    lab = kernels.active().label_components(arr, 8)[0]
    touches = np.zeros(lab.max() + 1, dtype=bool)
    for edge in (lab[0], lab[-1], lab[:, 0], lab[:, -1]):
        touches[np.unique(edge)] = True
    touches[0] = False
    return arr & ~touches[lab]


def select_lung_regions(
    labeled: LabeledImage,
    min_area_fraction: float = 0.005,
    max_regions: int = 2,
) -> np.ndarray:
    """Keep the largest interior components plausible as lung fields.

    A component qualifies when its area is at least ``min_area_fraction``
    of the slice and it does not touch the frame; of the qualifiers the
    ``max_regions`` largest are kept (area ties broken by label order).
    """
    lab = labeled.labels
    count = labeled.component_count
    if count < 0 or lab.ndim != 2 or lab.size == 0:
        raise ValueError("empty input")
    areas = np.bincount(lab.ravel(), minlength=count + 1)
    touches = np.zeros(count + 1, dtype=bool)
    for edge in (lab[0], lab[-1], lab[:, 0], lab[:, -1]):
        touches[np.unique(edge)] = True
    min_area = min_area_fraction * lab.size
    candidates = [
        k
        for k in range(1, count + 1)
        if areas[k] >= min_area and not touches[k]
    ]
    candidates.sort(key=lambda k: (-areas[k], k))
    keep = candidates[:max_regions]
    if not keep:
        raise ValueError("no lung candidate found")
    sel = np.zeros(count + 1, dtype=bool)
    sel[keep] = True
    return sel[lab]


def apply_mask(img, mask) -> np.ndarray:
    """Zero out everything outside the mask."""
    arr = np.asarray(img, dtype=np.float64)
    m = as_mask(mask)
    if arr.shape != m.shape:
        raise ValueError("shape mismatch between image and mask")
    return np.where(m, arr, 0.0)
