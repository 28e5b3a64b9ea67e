"""Synthetic thorax slices with exact ground truth.

Each phantom renders a dark background, a bright elliptical body, two
dark lung ellipses, bright vessels and bright nodules, then adds
Gaussian noise.  Nodule kinds mirror the clinically awkward cases:

* ``isolated``: a bright disk floating in the parenchyma.
* ``juxta_pleural``: a bright disk centred on the lung boundary; the
  part inside the lung bites into the parenchyma and is exactly the
  region a border correction must reclaim.
* ``juxta_vascular``: a bright disk centred on a vessel.

The ground truth is the union of the lung ellipses; every nodule
footprint (disk clipped to the lungs) is contained in it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from lungseg.image import MAX_LEVEL
from lungseg.morphology import dilate, disk as disk_se


@dataclass(frozen=True)
class Ellipse:
    """Axis lengths are semi-axes in (row, col) order; rotation in radians."""

    center: tuple[float, float]
    semi_axes: tuple[float, float]
    rotation: float = 0.0


@dataclass(frozen=True)
class Vessel:
    """Polyline of (row, col) vertices drawn with a round brush."""

    points: tuple[tuple[float, float], ...]
    thickness: float
    intensity: float
    wall_attached: bool = False


@dataclass(frozen=True)
class Nodule:
    center: tuple[float, float]
    radius: float
    intensity: float
    kind: str = "isolated"

    KINDS = ("isolated", "juxta_pleural", "juxta_vascular")


@dataclass(frozen=True)
class PhantomSpec:
    size: int = 512
    lungs: tuple[Ellipse, Ellipse] = ()
    body_intensity: float = 180.0
    parenchyma_intensity: float = 40.0
    background_intensity: float = 10.0
    vessels: tuple[Vessel, ...] = ()
    nodules: tuple[Nodule, ...] = ()
    noise_sigma: float = 0.0
    seed: int = 0
    mm_per_px: float = 0.7


@dataclass
class PhantomSample:
    """Rendered slice, ground truth and per-nodule footprints."""

    image: np.ndarray
    truth: np.ndarray
    nodule_footprints: list[np.ndarray] = field(default_factory=list)
    spec: PhantomSpec | None = None


def _local_coords(e: Ellipse, rows: np.ndarray, cols: np.ndarray):
    dr = rows - e.center[0]
    dc = cols - e.center[1]
    ct = math.cos(e.rotation)
    st = math.sin(e.rotation)
    return ct * dr + st * dc, -st * dr + ct * dc


def _ellipse_value(e: Ellipse, rows, cols) -> np.ndarray:
    """Quadratic form that is <= 1 inside the ellipse, == 1 on it."""
    lr, lc = _local_coords(e, rows, cols)
    return (lr / e.semi_axes[0]) ** 2 + (lc / e.semi_axes[1]) ** 2


def _ellipse_mask(e: Ellipse, size: int) -> np.ndarray:
    rows = np.arange(size, dtype=np.float64)[:, None]
    cols = np.arange(size, dtype=np.float64)[None, :]
    return _ellipse_value(e, rows, cols) <= 1.0


def point_on_ellipse(e: Ellipse, t: float) -> tuple[float, float]:
    """Boundary point at parameter angle ``t`` (world coordinates)."""
    lr = e.semi_axes[0] * math.cos(t)
    lc = e.semi_axes[1] * math.sin(t)
    ct = math.cos(e.rotation)
    st = math.sin(e.rotation)
    return (
        e.center[0] + ct * lr - st * lc,
        e.center[1] + st * lr + ct * lc,
    )


def _disk_mask(center, radius: float, size: int) -> np.ndarray:
    out = np.zeros((size, size), dtype=bool)
    r0 = max(int(math.floor(center[0] - radius - 1)), 0)
    r1 = min(int(math.ceil(center[0] + radius + 1)) + 1, size)
    c0 = max(int(math.floor(center[1] - radius - 1)), 0)
    c1 = min(int(math.ceil(center[1] + radius + 1)) + 1, size)
    if r0 >= r1 or c0 >= c1:
        return out
    rr = np.arange(r0, r1, dtype=np.float64)[:, None] - center[0]
    cc = np.arange(c0, c1, dtype=np.float64)[None, :] - center[1]
    out[r0:r1, c0:c1] = rr * rr + cc * cc <= radius * radius
    return out


def _segment_mask(a, b, thickness: float, size: int) -> np.ndarray:
    out = np.zeros((size, size), dtype=bool)
    half = thickness / 2.0
    r0 = max(int(math.floor(min(a[0], b[0]) - half - 1)), 0)
    r1 = min(int(math.ceil(max(a[0], b[0]) + half + 1)) + 1, size)
    c0 = max(int(math.floor(min(a[1], b[1]) - half - 1)), 0)
    c1 = min(int(math.ceil(max(a[1], b[1]) + half + 1)) + 1, size)
    if r0 >= r1 or c0 >= c1:
        return out
    rr = np.arange(r0, r1, dtype=np.float64)[:, None]
    cc = np.arange(c0, c1, dtype=np.float64)[None, :]
    abr = b[0] - a[0]
    abc = b[1] - a[1]
    denom = abr * abr + abc * abc
    if denom == 0.0:
        d2 = (rr - a[0]) ** 2 + (cc - a[1]) ** 2
    else:
        t = np.clip(((rr - a[0]) * abr + (cc - a[1]) * abc) / denom, 0.0, 1.0)
        d2 = (rr - a[0] - t * abr) ** 2 + (cc - a[1] - t * abc) ** 2
    out[r0:r1, c0:c1] = d2 <= half * half
    return out


def _vessel_mask(v: Vessel, size: int) -> np.ndarray:
    out = np.zeros((size, size), dtype=bool)
    for a, b in zip(v.points[:-1], v.points[1:]):
        out |= _segment_mask(a, b, v.thickness, size)
    return out


def _point_polyline_distance(p, points) -> float:
    best = math.inf
    for a, b in zip(points[:-1], points[1:]):
        abr = b[0] - a[0]
        abc = b[1] - a[1]
        denom = abr * abr + abc * abc
        if denom == 0.0:
            t = 0.0
        else:
            t = min(max(((p[0] - a[0]) * abr + (p[1] - a[1]) * abc) / denom, 0.0), 1.0)
        best = min(
            best,
            math.hypot(p[0] - a[0] - t * abr, p[1] - a[1] - t * abc),
        )
    return best


def _validate(spec: PhantomSpec) -> None:
    if spec.size < 16:
        raise ValueError("phantom size must be at least 16")
    if len(spec.lungs) != 2:
        raise ValueError("exactly two lung ellipses are required")
    if not spec.parenchyma_intensity < spec.body_intensity:
        raise ValueError("parenchyma intensity must be below body intensity")
    for v in (spec.body_intensity, spec.parenchyma_intensity, spec.background_intensity):
        if not 0 <= v <= MAX_LEVEL:
            raise ValueError(f"intensities must lie in [0, {MAX_LEVEL}]")
    if spec.noise_sigma < 0:
        raise ValueError("noise sigma must be non-negative")
    for nd in spec.nodules:
        if nd.kind not in Nodule.KINDS:
            raise ValueError(f"unknown nodule kind: {nd.kind!r}")
        d_mm = 2.0 * nd.radius * spec.mm_per_px
        if not 2.8 <= d_mm <= 11.2:
            raise ValueError("nodule size outside the screened range")
        if nd.kind == "juxta_pleural":
            q = min(
                abs(_scalar_ellipse_value(e, nd.center) - 1.0) for e in spec.lungs
            )
            if q > 0.2:
                raise ValueError("juxta-pleural nodule must sit on a lung boundary")
        elif nd.kind == "juxta_vascular":
            if not spec.vessels:
                raise ValueError("juxta-vascular nodule requires a vessel")
            d = min(
                _point_polyline_distance(nd.center, v.points) for v in spec.vessels
            )
            if d > max(v.thickness for v in spec.vessels) / 2.0 + 1.5:
                raise ValueError("juxta-vascular nodule must sit on a vessel")
        else:
            if min(_scalar_ellipse_value(e, nd.center) for e in spec.lungs) > 0.9:
                raise ValueError("isolated nodule must lie inside a lung")


def _scalar_ellipse_value(e: Ellipse, p) -> float:
    rows = np.array([[float(p[0])]])
    cols = np.array([[float(p[1])]])
    return float(_ellipse_value(e, rows, cols)[0, 0])


def body_ellipse(size: int) -> Ellipse:
    return Ellipse(
        center=(size / 2.0, size / 2.0),
        semi_axes=(0.34 * size, 0.41 * size),
    )


def generate_phantom(spec: PhantomSpec) -> PhantomSample:
    """Render the phantom deterministically from its spec.

    Raises ``ValueError("invalid anatomy")`` when the lung ellipses
    overlap or touch; the truth mask must keep two separate components.
    """
    _validate(spec)
    size = spec.size
    lung_masks = [_ellipse_mask(e, size) for e in spec.lungs]
    grown = dilate(lung_masks[0], disk_se(1))
    if (grown & lung_masks[1]).any():
        raise ValueError("invalid anatomy")
    truth = lung_masks[0] | lung_masks[1]
    img = np.full((size, size), spec.background_intensity, dtype=np.float64)
    img[_ellipse_mask(body_ellipse(size), size)] = spec.body_intensity
    img[truth] = spec.parenchyma_intensity
    for v in spec.vessels:
        img[_vessel_mask(v, size)] = v.intensity
    footprints = []
    for nd in spec.nodules:
        d = _disk_mask(nd.center, nd.radius, size)
        img[d] = nd.intensity
        footprints.append(d & truth)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        img = img + rng.normal(0.0, spec.noise_sigma, img.shape)
    img = np.clip(img, 0.0, float(MAX_LEVEL))
    return PhantomSample(image=img, truth=truth, nodule_footprints=footprints, spec=spec)


def sample_category(spec: PhantomSpec) -> str:
    """Suite bookkeeping: which awkward feature the sample carries."""
    if any(nd.kind == "juxta_pleural" for nd in spec.nodules):
        return "juxta_pleural"
    if any(v.wall_attached for v in spec.vessels):
        return "wall_vessel"
    if spec.nodules:
        return "isolated"
    return "clean"


def _suite_spec(category: str, size: int, rng: np.random.Generator) -> PhantomSpec:
    s = size / 512.0
    semi = []
    for _ in range(2):
        semi.append(
            (
                125.0 * s * rng.uniform(0.92, 1.08),
                68.0 * s * rng.uniform(0.92, 1.08),
            )
        )
    gap = float(rng.choice([17.0, 18.0, 19.0])) * s
    row_c = 0.5 * size + rng.uniform(-4.0, 4.0) * s
    left = Ellipse(
        center=(row_c + rng.uniform(-2, 2) * s, 0.5 * size - gap / 2.0 - semi[0][1]),
        semi_axes=semi[0],
        rotation=rng.uniform(-0.06, 0.06),
    )
    right = Ellipse(
        center=(row_c + rng.uniform(-2, 2) * s, 0.5 * size + gap / 2.0 + semi[1][1]),
        semi_axes=semi[1],
        rotation=rng.uniform(-0.06, 0.06),
    )
    lungs = (left, right)
    vessels: list[Vessel] = []
    for lung in lungs:
        for _ in range(int(rng.integers(1, 3))):
            t0 = rng.uniform(0.0, 2.0 * math.pi)
            rho0 = rng.uniform(0.1, 0.3)
            rho1 = rng.uniform(0.45, 0.65)
            a = _interior_point(lung, t0, rho0)
            b = _interior_point(lung, t0 + rng.uniform(-0.5, 0.5), rho1)
            vessels.append(
                Vessel(
                    points=(a, b),
                    thickness=rng.uniform(2.0, 3.5) * s,
                    intensity=172.0,
                )
            )
    nodules: list[Nodule] = []
    if category == "wall_vessel":
        lung_i = int(rng.integers(0, 2))
        lung = lungs[lung_i]
        t = _outer_angle(lung_i, rng)
        inner = _interior_point(lung, t, rng.uniform(0.62, 0.70))
        outer = _interior_point(lung, t, 1.04)
        vessels.append(
            Vessel(
                points=(inner, outer),
                thickness=rng.uniform(2.5, 4.0) * s,
                intensity=175.0,
                wall_attached=True,
            )
        )
    elif category == "juxta_pleural":
        lung_i = int(rng.integers(0, 2))
        lung = lungs[lung_i]
        for t in _spread_angles(int(rng.integers(1, 3)), lung_i, rng):
            nodules.append(
                Nodule(
                    center=point_on_ellipse(lung, t),
                    radius=rng.uniform(4.5, 6.5) * s,
                    intensity=185.0,
                    kind="juxta_pleural",
                )
            )
    elif category == "isolated":
        lung = lungs[int(rng.integers(0, 2))]
        nodules.append(
            Nodule(
                center=_interior_point(
                    lung, rng.uniform(0.0, 2.0 * math.pi), rng.uniform(0.2, 0.5)
                ),
                radius=rng.uniform(2.5, 5.0) * s,
                intensity=185.0,
                kind="isolated",
            )
        )
        if rng.uniform() < 0.5 and vessels:
            v = vessels[int(rng.integers(0, len(vessels)))]
            a, b = v.points[0], v.points[-1]
            u = rng.uniform(0.3, 0.7)
            nodules.append(
                Nodule(
                    center=(a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])),
                    radius=rng.uniform(2.5, 4.0) * s,
                    intensity=185.0,
                    kind="juxta_vascular",
                )
            )
    return PhantomSpec(
        size=size,
        lungs=lungs,
        vessels=tuple(vessels),
        nodules=tuple(nodules),
        noise_sigma=float(rng.choice([4.0, 8.0, 12.0])),
        seed=int(rng.integers(0, 2**31 - 1)),
    )


def _interior_point(e: Ellipse, t: float, rho: float) -> tuple[float, float]:
    """Point at fractional radius ``rho`` along direction ``t`` inside ``e``."""
    lr = rho * e.semi_axes[0] * math.cos(t)
    lc = rho * e.semi_axes[1] * math.sin(t)
    ct = math.cos(e.rotation)
    st = math.sin(e.rotation)
    return (
        e.center[0] + ct * lr - st * lc,
        e.center[1] + st * lr + ct * lc,
    )


def _outer_angle(lung_index: int, rng: np.random.Generator) -> float:
    """Boundary angle pointing away from the mediastinum."""
    if lung_index == 0:
        return rng.uniform(math.pi + 0.4, 2.0 * math.pi - 0.4)
    return rng.uniform(0.4, math.pi - 0.4)


def _spread_angles(n: int, lung_index: int, rng: np.random.Generator) -> list[float]:
    angles: list[float] = []
    for _ in range(8 * n):
        t = _outer_angle(lung_index, rng)
        if all(abs(t - prev) > 0.6 for prev in angles):
            angles.append(t)
        if len(angles) == n:
            break
    return angles


def default_suite(n: int, seed: int, size: int = 512) -> list[PhantomSample]:
    """Deterministic benchmark suite with a fixed category mix.

    40% juxta-pleural samples, 20% wall-attached-vessel samples and the
    rest split between isolated-nodule and clean slices (counts rounded;
    every category appears once n reaches 5).  Noise levels cycle
    through sigma 4, 8 and 12.
    """
    if n < 1:
        raise ValueError("suite size must be positive")
    n_jp = round(0.4 * n)
    n_wall = round(0.2 * n)
    rest = n - n_jp - n_wall
    n_iso = (rest + 1) // 2
    n_clean = rest - n_iso
    categories = (
        ["juxta_pleural"] * n_jp
        + ["wall_vessel"] * n_wall
        + ["isolated"] * n_iso
        + ["clean"] * n_clean
    )
    rng = np.random.default_rng(seed)
    rng.shuffle(categories)
    return [generate_phantom(_suite_spec(cat, size, rng)) for cat in categories]
