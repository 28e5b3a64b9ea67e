"""Pure-numpy implementations of the hot inner-loop kernels.

Fallback twins of the numba kernels in ``_kernels_numba``.  Both modules
expose the same functions with identical semantics (and, for the integer
and boolean kernels, bit-identical output) so the dispatch layer in
``lungseg.kernels`` can swap one for the other.
"""

from __future__ import annotations

import numpy as np


def _shifted(mask: np.ndarray, dr: int, dc: int) -> np.ndarray:
    """Return ``out[p] = mask[p + (dr, dc)]`` with out-of-bounds = False."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    rs = slice(max(dr, 0), min(h + dr, h))
    cs = slice(max(dc, 0), min(w + dc, w))
    rd = slice(max(-dr, 0), min(h - dr, h))
    cd = slice(max(-dc, 0), min(w - dc, w))
    out[rd, cd] = mask[rs, cs]
    return out


def median_filter(img: np.ndarray, window: int) -> np.ndarray:
    """Square median filter with replicated (clamped) borders."""
    k = window // 2
    if k == 0:
        return img.copy()
    h, w = img.shape
    padded = np.pad(img, k, mode="edge")
    stack = np.empty((window * window, h, w), dtype=img.dtype)
    i = 0
    for dr in range(window):
        for dc in range(window):
            stack[i] = padded[dr:dr + h, dc:dc + w]
            i += 1
    # window * window is odd, so np.median picks an actual input value
    return np.median(stack, axis=0)


def erode(mask: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Binary erosion; neighbourhoods reaching past the frame count as background."""
    out = np.ones_like(mask)
    for dr, dc in offsets:
        out &= _shifted(mask, int(dr), int(dc))
    return out


def dilate(mask: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Binary dilation by a centrosymmetric structuring element."""
    out = np.zeros_like(mask)
    for dr, dc in offsets:
        out |= _shifted(mask, int(dr), int(dc))
    return out


def label_components(mask: np.ndarray, connectivity: int) -> tuple[np.ndarray, int]:
    """Connected-component labels, numbered in first-encounter raster order.

    Row runs are extracted with numpy and merged across rows with a small
    union-find, which keeps the python-level work proportional to the run
    count rather than the pixel count.
    """
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    parent: list[int] = []

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            if ra < rb:
                parent[rb] = ra
            else:
                parent[ra] = rb

    reach = 1 if connectivity == 8 else 0
    rows_runs: list[list[tuple[int, int, int]]] = []
    prev: list[tuple[int, int, int]] = []
    for r in range(h):
        m = mask[r].astype(np.int8)
        diff = np.diff(m)
        starts = np.flatnonzero(diff == 1) + 1
        ends = np.flatnonzero(diff == -1) + 1
        if m[0]:
            starts = np.concatenate(([0], starts))
        if m[-1]:
            ends = np.concatenate((ends, [w]))
        cur = []
        for s, e in zip(starts, ends):
            rid = len(parent)
            parent.append(rid)
            cur.append((int(s), int(e), rid))
        i = j = 0
        while i < len(prev) and j < len(cur):
            ps, pe, pid = prev[i]
            cs, ce, cid = cur[j]
            if ps - reach < ce and cs - reach < pe:
                union(pid, cid)
            if pe < ce:
                i += 1
            elif ce < pe:
                j += 1
            else:
                i += 1
                j += 1
        prev = cur
        rows_runs.append(cur)

    first_idx: dict[int, int] = {}
    for r, runs in enumerate(rows_runs):
        for s, _e, rid in runs:
            root = find(rid)
            lin = r * w + s
            if root not in first_idx or lin < first_idx[root]:
                first_idx[root] = lin
    order = sorted(first_idx, key=first_idx.get)
    relabel = {root: i + 1 for i, root in enumerate(order)}
    for r, runs in enumerate(rows_runs):
        for s, e, rid in runs:
            labels[r, s:e] = relabel[find(rid)]
    return labels, len(order)


def chan_vese_step(img, phi, c_in, c_out, mu, lam_in, lam_out, dt, eps):
    """One explicit update of the two-phase region-based contour flow.

    Returns the new field and the number of pixels whose sign flipped.
    Neighbour access clamps at the frame (replicated border).
    """
    p = np.pad(phi, 1, mode="edge")
    fx = (p[1:-1, 2:] - p[1:-1, :-2]) / 2.0
    fy = (p[2:, 1:-1] - p[:-2, 1:-1]) / 2.0
    fxx = p[1:-1, 2:] + p[1:-1, :-2] - 2.0 * phi
    fyy = p[2:, 1:-1] + p[:-2, 1:-1] - 2.0 * phi
    fxy = 0.25 * (p[2:, 2:] + p[:-2, :-2] - p[:-2, 2:] - p[2:, :-2])
    grad2 = fx * fx + fy * fy
    curv = (fxx * fy * fy - 2.0 * fx * fy * fxy + fyy * fx * fx) / (
        grad2 * np.sqrt(grad2) + 1e-8
    )
    delta = eps / (np.pi * (eps * eps + phi * phi))
    din = img - c_in
    dout = img - c_out
    force = mu * curv - lam_in * din * din + lam_out * dout * dout
    new_phi = phi + dt * delta * force
    changed = int(np.count_nonzero((new_phi >= 0.0) != (phi >= 0.0)))
    return new_phi, changed


def directed_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """max over points of ``a`` of the distance to the nearest point of ``b``."""
    af = a.astype(np.float64)
    bf = b.astype(np.float64)
    best = 0.0
    for start in range(0, af.shape[0], 512):
        chunk = af[start:start + 512]
        d2 = (chunk[:, None, 0] - bf[None, :, 0]) ** 2 + (
            chunk[:, None, 1] - bf[None, :, 1]
        ) ** 2
        worst = d2.min(axis=1).max()
        if worst > best:
            best = float(worst)
    return float(np.sqrt(best))
