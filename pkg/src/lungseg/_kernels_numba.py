"""Numba-accelerated twins of the kernels in ``_kernels_numpy``.

Each function carries ``@njit(cache=True)`` so compiled code is reused
across processes.  Semantics match the numpy versions exactly; the
floating-point kernels use the same per-pixel arithmetic so results are
bit-identical across backends.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def median_filter(img, window):
    k = window // 2
    h, w = img.shape
    out = np.empty_like(img)
    buf = np.empty(window * window, dtype=img.dtype)
    for r in range(h):
        for c in range(w):
            n = 0
            for dr in range(-k, k + 1):
                rr = r + dr
                if rr < 0:
                    rr = 0
                elif rr >= h:
                    rr = h - 1
                for dc in range(-k, k + 1):
                    cc = c + dc
                    if cc < 0:
                        cc = 0
                    elif cc >= w:
                        cc = w - 1
                    buf[n] = img[rr, cc]
                    n += 1
            buf.sort()
            out[r, c] = buf[n // 2]
    return out


@njit(cache=True)
def erode(mask, offsets):
    h, w = mask.shape
    out = np.zeros_like(mask)
    n = offsets.shape[0]
    for r in range(h):
        for c in range(w):
            if not mask[r, c]:
                continue
            keep = True
            for i in range(n):
                rr = r + offsets[i, 0]
                cc = c + offsets[i, 1]
                if rr < 0 or rr >= h or cc < 0 or cc >= w or not mask[rr, cc]:
                    keep = False
                    break
            out[r, c] = keep
    return out


@njit(cache=True)
def dilate(mask, offsets):
    h, w = mask.shape
    out = np.zeros_like(mask)
    n = offsets.shape[0]
    for r in range(h):
        for c in range(w):
            if not mask[r, c]:
                continue
            for i in range(n):
                rr = r + offsets[i, 0]
                cc = c + offsets[i, 1]
                if 0 <= rr < h and 0 <= cc < w:
                    out[rr, cc] = True
    return out


@njit(cache=True)
def label_components(mask, connectivity):
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    stack = np.empty(h * w, dtype=np.int64)
    count = 0
    for r0 in range(h):
        for c0 in range(w):
            if mask[r0, c0] and labels[r0, c0] == 0:
                count += 1
                labels[r0, c0] = count
                stack[0] = r0 * w + c0
                top = 1
                while top > 0:
                    top -= 1
                    pos = stack[top]
                    r = pos // w
                    c = pos % w
                    for dr in range(-1, 2):
                        for dc in range(-1, 2):
                            if dr == 0 and dc == 0:
                                continue
                            if connectivity == 4 and dr != 0 and dc != 0:
                                continue
                            rr = r + dr
                            cc = c + dc
                            if 0 <= rr < h and 0 <= cc < w:
                                if mask[rr, cc] and labels[rr, cc] == 0:
                                    labels[rr, cc] = count
                                    stack[top] = rr * w + cc
                                    top += 1
    return labels, count


@njit(cache=True)
def chan_vese_step(img, phi, c_in, c_out, mu, lam_in, lam_out, dt, eps):
    h, w = phi.shape
    new_phi = np.empty_like(phi)
    changed = 0
    for r in range(h):
        rm = r - 1 if r > 0 else 0
        rp = r + 1 if r < h - 1 else h - 1
        for c in range(w):
            cm = c - 1 if c > 0 else 0
            cp = c + 1 if c < w - 1 else w - 1
            v = phi[r, c]
            fx = (phi[r, cp] - phi[r, cm]) / 2.0
            fy = (phi[rp, c] - phi[rm, c]) / 2.0
            fxx = phi[r, cp] + phi[r, cm] - 2.0 * v
            fyy = phi[rp, c] + phi[rm, c] - 2.0 * v
            fxy = 0.25 * (
                phi[rp, cp] + phi[rm, cm] - phi[rm, cp] - phi[rp, cm]
            )
            grad2 = fx * fx + fy * fy
            curv = (fxx * fy * fy - 2.0 * fx * fy * fxy + fyy * fx * fx) / (
                grad2 * np.sqrt(grad2) + 1e-8
            )
            delta = eps / (np.pi * (eps * eps + v * v))
            din = img[r, c] - c_in
            dout = img[r, c] - c_out
            force = mu * curv - lam_in * din * din + lam_out * dout * dout
            nv = v + dt * delta * force
            new_phi[r, c] = nv
            if (nv >= 0.0) != (v >= 0.0):
                changed += 1
    return new_phi, changed


@njit(cache=True)
def directed_hausdorff(a, b):
    best = 0.0
    na = a.shape[0]
    nb = b.shape[0]
    for i in range(na):
        ar = a[i, 0]
        ac = a[i, 1]
        cmin = 1e300
        for j in range(nb):
            dr = float(ar - b[j, 0])
            dc = float(ac - b[j, 1])
            d2 = dr * dr + dc * dc
            if d2 < cmin:
                cmin = d2
                if cmin <= best:
                    break
        if cmin > best:
            best = cmin
    return np.sqrt(best)
