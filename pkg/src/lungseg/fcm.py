"""Fuzzy c-means clustering pipeline for lung parenchyma extraction.

Clustering runs on the distinct intensity values weighted by their
counts, which is an exact reformulation of per-pixel updates (identical
intensities always share identical memberships) and much faster on
quantized slices.  The per-pixel membership matrix is expanded at the
end so downstream code sees one membership vector per pixel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from lungseg.image import (
    apply_mask,
    as_gray,
    clear_border_objects,
    connected_components,
    fill_holes,
    invert,
    select_lung_regions,
)
from lungseg.morphology import BorderCorrection, apply_border_correction
from lungseg.results import SegmentationResult


@dataclass
class FcmState:
    """Converged clustering state.

    ``centers`` are sorted ascending; ``memberships`` has one row per
    input value with columns in center order, each row summing to 1.
    ``objective_history`` holds the objective after every iteration and
    is non-increasing (up to float roundoff).
    """

    centers: np.ndarray
    memberships: np.ndarray
    fuzzifier: float
    objective: float
    iterations: int
    objective_history: list[float] = field(default_factory=list)


def _memberships(values: np.ndarray, centers: np.ndarray, m: float) -> np.ndarray:
    """Membership matrix (centers x values) for given centers.

    A value coinciding with a center gets full membership in the first
    such center (the standard singularity rule).
    """
    d2 = (values[None, :] - centers[:, None]) ** 2
    zero = d2 == 0.0
    singular = zero.any(axis=0)
    p = 1.0 / (m - 1.0)
    with np.errstate(divide="ignore"):
        w = d2 ** -p
    with np.errstate(invalid="ignore"):
        u = w / w.sum(axis=0)
    if singular.any():
        cols = np.nonzero(singular)[0]
        u[:, cols] = 0.0
        u[np.argmax(zero[:, cols], axis=0), cols] = 1.0
    return u


def fcm_cluster(
    values,
    c: int = 2,
    m: float = 2.0,
    tol: float = 1e-4,
    max_iter: int = 300,
    seed: int = 0,
) -> FcmState:
    """Cluster scalar intensities with fuzzy c-means.

    Centers start uniformly random in the value range (seeded), then
    membership and center updates alternate until the largest center
    movement drops below ``tol`` or ``max_iter`` is reached.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(x)):
        raise ValueError("intensities must be finite")
    if c < 1:
        raise ValueError("cluster count must be positive")
    if m <= 1.0:
        raise ValueError("fuzzifier must exceed 1")
    uniq, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    if c > uniq.size:
        raise ValueError("too many clusters")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(x.min(), x.max(), size=c)
    wcounts = counts.astype(np.float64)
    history: list[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        u = _memberships(uniq, centers, m)
        um = u ** m
        den = um @ wcounts
        num = um @ (uniq * wcounts)
        new_centers = np.where(den > 0.0, num / np.maximum(den, 1e-300), centers)
        movement = float(np.max(np.abs(new_centers - centers)))
        centers = new_centers
        d2 = (uniq[None, :] - centers[:, None]) ** 2
        history.append(float(((um * d2) @ wcounts).sum()))
        if movement < tol:
            break
    u = _memberships(uniq, centers, m)
    order = np.argsort(centers, kind="stable")
    centers = centers[order]
    u = u[order]
    per_pixel = u[:, inverse].T.copy()
    return FcmState(
        centers=centers,
        memberships=per_pixel,
        fuzzifier=float(m),
        objective=history[-1],
        iterations=iterations,
        objective_history=history,
    )


def fcm_defuzzify(state: FcmState, img) -> np.ndarray:
    """Hard mask of the lower-center (darker) cluster.

    Only defined for two clusters; a pixel belongs to the foreground
    when its membership in the darker cluster is at least as large as in
    the brighter one (ties go to the foreground).
    """
    if state.centers.size != 2:
        raise ValueError("defuzzify requires exactly two clusters")
    arr = as_gray(img)
    if state.memberships.shape[0] != arr.size:
        raise ValueError("shape mismatch between state and image")
    fg = state.memberships[:, 0] >= state.memberships[:, 1]
    return fg.reshape(arr.shape)


def fcm_segment(
    img,
    correction: BorderCorrection | None = None,
    seed: int = 0,
) -> SegmentationResult:
    """Full fuzzy clustering pipeline from raw slice to parenchyma image.

    Stages: two-cluster fuzzy c-means, negative so the darker cluster is
    foreground, removal of frame-connected background, lung region
    selection, hole filling, border correction, masking of the input.
    """
    if correction is None:
        correction = BorderCorrection()
    arr = as_gray(img)
    state = fcm_cluster(arr.ravel(), c=2, m=2.0, tol=1e-4, max_iter=300, seed=seed)
    lung_fg = fcm_defuzzify(state, arr)
    bright = invert(lung_fg)
    cleared = clear_border_objects(lung_fg)
    selected = select_lung_regions(connected_components(cleared, 8))
    filled = fill_holes(selected)
    corrected = apply_border_correction(arr, filled, correction)
    parenchyma = apply_mask(arr, corrected)
    return SegmentationResult(
        mask=corrected,
        parenchyma=parenchyma,
        iterations=state.iterations,
        stages=[
            ("input", arr.copy()),
            ("clustering", bright),
            ("negative", lung_fg),
            ("tissue_removal", filled),
            ("mask_after_correction", corrected),
            ("parenchyma", parenchyma),
        ],
    )
