"""Binary morphology, boundary tracing and lung border correction.

The border corrections repair the pleural boundary after coarse
segmentation: juxta-pleural nodules and wall-attached vessels are
excluded by intensity-driven stages and show up as bites or channels in
the mask.  ``amf_border_correction`` measures each concavity along the
traced boundary and closes it locally with a disk sized to its depth;
``rolling_ball_correction`` closes with one fixed disk everywhere;
``gmm_correction`` reclassifies a band around the boundary with a
two-component Gaussian mixture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lungseg import kernels
from lungseg.image import as_gray, as_mask

# Moore neighbourhood in clockwise order (screen orientation, row down)
_CLOCKWISE = (
    (-1, -1), (-1, 0), (-1, 1), (0, 1),
    (1, 1), (1, 0), (1, -1), (0, -1),
)


@dataclass(frozen=True)
class StructuringElement:
    """Centrosymmetric neighbourhood given as (row, col) offsets."""

    radius: int
    offsets: np.ndarray

    def __post_init__(self):
        offs = np.asarray(self.offsets, dtype=np.int64)
        object.__setattr__(self, "offsets", offs)
        if offs.ndim != 2 or offs.shape[1] != 2:
            raise ValueError("offsets must be an (n, 2) array")
        as_set = {(int(r), int(c)) for r, c in offs}
        if (0, 0) not in as_set:
            raise ValueError("structuring element must contain the origin")
        if any((-r, -c) not in as_set for r, c in as_set):
            raise ValueError("structuring element must be centrosymmetric")


def disk(radius: int) -> StructuringElement:
    """Disk of integer offsets with ``dr**2 + dc**2 <= radius**2``."""
    if radius < 1 or int(radius) != radius:
        raise ValueError("radius must be a positive integer")
    radius = int(radius)
    offs = [
        (dr, dc)
        for dr in range(-radius, radius + 1)
        for dc in range(-radius, radius + 1)
        if dr * dr + dc * dc <= radius * radius
    ]
    return StructuringElement(radius=radius, offsets=np.array(offs, dtype=np.int64))


def erode(mask, se: StructuringElement) -> np.ndarray:
    """Binary erosion; the frame exterior counts as background, so border
    pixels erode away."""
    return kernels.active().erode(as_mask(mask), se.offsets)


def dilate(mask, se: StructuringElement) -> np.ndarray:
    """Binary dilation clipped to the frame."""
    return kernels.active().dilate(as_mask(mask), se.offsets)


def binary_open(mask, se: StructuringElement) -> np.ndarray:
    """Erosion followed by dilation (removes specks thinner than the disk)."""
    return dilate(erode(mask, se), se)


def binary_close(mask, se: StructuringElement) -> np.ndarray:
    """Dilation followed by erosion (fills gaps thinner than the disk)."""
    return erode(dilate(mask, se), se)


def _padded_close(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Closing computed on a padded frame, then cropped.

    Equals the infinite-plane closing restricted to the frame, which is
    extensive for every mask including ones touching the border (the raw
    ``binary_close`` erodes border pixels away instead).
    """
    r = se.radius
    padded = np.pad(mask, r, mode="constant", constant_values=False)
    closed = kernels.active().erode(
        kernels.active().dilate(padded, se.offsets), se.offsets
    )
    return closed[r:-r, r:-r]


def boundary_trace(mask) -> list[np.ndarray]:
    """Trace the closed outer boundary of every 8-connected component.

    Returns one (n, 2) array of (row, col) points per component, in
    label order, walked clockwise (screen orientation).  Repeat visits
    along one-pixel-wide appendages are dropped so each boundary pixel
    appears exactly once.
    """
    arr = as_mask(mask)
    if not arr.any():
        raise ValueError("empty mask")
    labels, count = kernels.active().label_components(arr, 8)
    out = []
    for k in range(1, count + 1):
        out.append(_trace_one(labels == k))
    return out


def _trace_one(comp: np.ndarray) -> np.ndarray:
    rows, cols = np.nonzero(comp)
    start = (int(rows[0]), int(cols[0]))
    # raster-first pixel: west and north neighbours are background
    back = (start[0], start[1] - 1)
    points = [start]
    seen = {start}
    state0 = (start, back)
    p, b = start, back
    h, w = comp.shape
    limit = 4 * comp.size + 8
    for _ in range(limit):
        bi = _CLOCKWISE.index((b[0] - p[0], b[1] - p[1]))
        nxt = None
        for step in range(1, 9):
            off = _CLOCKWISE[(bi + step) % 8]
            cand = (p[0] + off[0], p[1] + off[1])
            if 0 <= cand[0] < h and 0 <= cand[1] < w and comp[cand]:
                nxt = cand
                prev_off = _CLOCKWISE[(bi + step - 1) % 8]
                b = (p[0] + prev_off[0], p[1] + prev_off[1])
                break
        if nxt is None:
            break  # isolated pixel
        p = nxt
        if (p, b) == state0:
            break
        if p not in seen:
            seen.add(p)
            points.append(p)
    return np.array(points, dtype=np.int64)


def local_concavity_depth(boundary: np.ndarray, index: int, window: int = 10) -> float:
    """Depth of the boundary at ``index`` below its local chord.

    The chord joins the points ``window`` steps before and after the
    index along the closed boundary.  The perpendicular distance counts
    only when the point lies on the interior side of the chord (to the
    right of travel for a clockwise boundary); convex stretches score 0.
    Boundaries shorter than ``2 * window + 1`` points score 0.
    """
    n = boundary.shape[0]
    if n < 2 * window + 1:
        return 0.0
    a = boundary[(index - window) % n]
    bpt = boundary[(index + window) % n]
    p = boundary[index]
    ur = float(bpt[0] - a[0])
    uc = float(bpt[1] - a[1])
    norm = math.hypot(ur, uc)
    if norm == 0.0:
        return 0.0
    vr = float(p[0] - a[0])
    vc = float(p[1] - a[1])
    cross = ur * vc - uc * vr
    if cross >= 0.0:
        return 0.0
    return -cross / norm


def _paint_disks(shape, points, radius: int) -> np.ndarray:
    """Union of rasterized disks of ``radius`` centred on ``points``."""
    out = np.zeros(shape, dtype=bool)
    d = 2 * radius + 1
    yy, xx = np.ogrid[-radius:radius + 1, -radius:radius + 1]
    stamp = yy * yy + xx * xx <= radius * radius
    h, w = shape
    for r, c in points:
        r0, c0 = r - radius, c - radius
        rs, cs = max(r0, 0), max(c0, 0)
        re, ce = min(r0 + d, h), min(c0 + d, w)
        if rs >= re or cs >= ce:
            continue
        out[rs:re, cs:ce] |= stamp[rs - r0:re - r0, cs - c0:ce - c0]
    return out


def _concavity_depths(boundary: np.ndarray, window: int) -> np.ndarray:
    """Vectorized ``local_concavity_depth`` over all boundary indices."""
    n = boundary.shape[0]
    if n < 2 * window + 1:
        return np.zeros(n)
    idx = np.arange(n)
    a = boundary[(idx - window) % n].astype(np.float64)
    b = boundary[(idx + window) % n].astype(np.float64)
    p = boundary.astype(np.float64)
    u = b - a
    v = p - a
    norm = np.hypot(u[:, 0], u[:, 1])
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    depth = np.where((cross < 0) & (norm > 0), -cross / np.maximum(norm, 1e-12), 0.0)
    return depth


def amf_border_correction(
    mask,
    max_radius: int = 15,
    depth_threshold: float = 2.0,
    window: int = 10,
) -> np.ndarray:
    """Adaptive border correction driven by local concavity depth.

    Boundary points whose concavity depth exceeds ``depth_threshold``
    trigger a morphological closing with a disk of radius
    ``min(ceil(depth), max_radius)``, applied only near the flagged
    point.  The union of the local closings is added to the mask, so the
    output always contains the input.  Shallow (anatomical) boundary
    texture stays untouched.
    """
    arr = as_mask(mask)
    boundaries = boundary_trace(arr)
    by_radius: dict[int, list[tuple[int, int]]] = {}
    for boundary in boundaries:
        depths = _concavity_depths(boundary, window)
        for i in np.nonzero(depths > depth_threshold)[0]:
            r = min(int(math.ceil(depths[i])), max_radius)
            by_radius.setdefault(r, []).append(
                (int(boundary[i, 0]), int(boundary[i, 1]))
            )
    out = arr.copy()
    for r in sorted(by_radius):
        closed = _padded_close(arr, disk(r))
        allowed = _paint_disks(arr.shape, by_radius[r], 2 * r)
        out |= closed & allowed
    return out


def rolling_ball_correction(mask, radius: int = 10) -> np.ndarray:
    """Closing with one fixed disk over the whole mask (extensive)."""
    arr = as_mask(mask)
    return _padded_close(arr, disk(radius))


def fit_two_gaussians(values: np.ndarray, max_iter: int = 100, tol: float = 1e-5):
    """Fit a two-component 1-d Gaussian mixture by EM.

    Means seed from the 25th/75th percentiles, weights start equal and
    variances at the sample variance.  Returns (weights, means, variances,
    log_likelihood_history, responsibilities); the history is
    non-decreasing.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    m1, m2 = np.percentile(x, [25.0, 75.0])
    if m1 == m2:
        m1, m2 = float(x.min()), float(x.max())
    v = max(float(x.var()), 1e-6)
    weights = np.array([0.5, 0.5])
    means = np.array([m1, m2], dtype=np.float64)
    variances = np.array([v, v], dtype=np.float64)
    history: list[float] = []
    resp = None
    for _ in range(max_iter):
        lp = (
            np.log(weights)[:, None]
            - 0.5 * np.log(2.0 * np.pi * variances)[:, None]
            - (x[None, :] - means[:, None]) ** 2 / (2.0 * variances[:, None])
        )
        norm = np.logaddexp(lp[0], lp[1])
        ll = float(norm.sum())
        resp = np.exp(lp - norm[None, :])
        history.append(ll)
        if len(history) > 1 and abs(history[-1] - history[-2]) < tol:
            break
        n_k = resp.sum(axis=1)
        if n_k.min() < 1e-12:
            break
        weights = n_k / x.size
        means = (resp * x[None, :]).sum(axis=1) / n_k
        variances = np.maximum(
            (resp * (x[None, :] - means[:, None]) ** 2).sum(axis=1) / n_k, 1e-6
        )
    return weights, means, variances, history, resp


def gmm_correction(img, mask, band_radius: int = 5) -> np.ndarray:
    """Reclassify a band around the mask boundary with a 2-Gaussian mixture.

    Band pixels whose posterior favours the lower-mean (lung-side)
    component are added to the mask; nothing is removed.  A degenerate
    band (empty, or a single intensity) leaves the mask unchanged.
    """
    arr = as_gray(img)
    m = as_mask(mask)
    if arr.shape != m.shape:
        raise ValueError("shape mismatch between image and mask")
    se = disk(band_radius)
    band = dilate(m, se) & ~erode(m, se)
    if not band.any():
        return m.copy()
    x = arr[band]
    if np.ptp(x) == 0.0:
        return m.copy()
    _w, means, _v, _hist, resp = fit_two_gaussians(x)
    low = int(np.argmin(means))
    add = np.zeros_like(m)
    add[band] = resp[low] > 0.5
    return m | add


@dataclass(frozen=True)
class BorderCorrection:
    """Which boundary repair to run after region selection."""

    kind: str = "amf"
    amf_max_radius: int = 15
    amf_depth_threshold: float = 2.0
    amf_window: int = 10
    rolling_ball_radius: int = 10
    gmm_band_radius: int = 5

    KINDS = ("none", "amf", "rolling_ball", "gmm")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown correction kind: {self.kind!r}")
        if self.amf_max_radius < 1 or self.rolling_ball_radius < 1:
            raise ValueError("correction radii must be positive")


def apply_border_correction(img, mask, correction: BorderCorrection) -> np.ndarray:
    """Dispatch to the configured border correction (identity for none)."""
    if correction.kind == "none":
        return as_mask(mask).copy()
    if correction.kind == "amf":
        return amf_border_correction(
            mask,
            max_radius=correction.amf_max_radius,
            depth_threshold=correction.amf_depth_threshold,
            window=correction.amf_window,
        )
    if correction.kind == "rolling_ball":
        return rolling_ball_correction(mask, radius=correction.rolling_ball_radius)
    return gmm_correction(img, mask, band_radius=correction.gmm_band_radius)
