"""Planar polygon helpers: footprint construction, orientation, rasterization."""
from __future__ import annotations

import math

import numpy as np


def signed_area(poly) -> float:
    p = np.asarray(poly, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def ensure_ccw(poly):
    p = np.asarray(poly, dtype=np.float64)
    return p if signed_area(p) > 0 else p[::-1].copy()


def _rotate(local, cx, cy, angle_deg):
    t = math.radians(angle_deg)
    c, s = math.cos(t), math.sin(t)
    x = local[:, 0] * c - local[:, 1] * s + cx
    y = local[:, 0] * s + local[:, 1] * c + cy
    return np.column_stack([x, y])


def rectangle(cx, cy, length, width, angle_deg=0.0):
    """Rectangle centred at (cx, cy); ``length`` runs along the rotated x axis."""
    hl, hw = length / 2.0, width / 2.0
    local = np.array([[-hl, -hw], [hl, -hw], [hl, hw], [-hl, hw]])
    return ensure_ccw(_rotate(local, cx, cy, angle_deg))


def l_shape(cx, cy, length, width, cut_length, cut_width, angle_deg=0.0):
    """Rectangle with one corner notch of size ``cut_length`` x ``cut_width`` removed."""
    hl, hw = length / 2.0, width / 2.0
    local = np.array([
        [-hl, -hw], [hl, -hw], [hl, hw - cut_width],
        [hl - cut_length, hw - cut_width], [hl - cut_length, hw], [-hl, hw],
    ])
    return ensure_ccw(_rotate(local, cx, cy, angle_deg))


def rotated_extent(length, width, angle_deg):
    """Axis-aligned bounding-box size of a rotated rectangle."""
    t = math.radians(angle_deg)
    c, s = abs(math.cos(t)), abs(math.sin(t))
    return length * c + width * s, length * s + width * c


def points_in_polygon(x, y, poly):
    """Even-odd test of points ``(x, y)`` against a simple polygon."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = np.asarray(poly, dtype=np.float64)
    inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    n = len(p)
    for i in range(n):
        x1, y1 = p[i]
        x2, y2 = p[(i + 1) % n]
        if y1 == y2:
            continue
        crosses = (y1 > y) != (y2 > y)
        xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
    return inside


def polygon_window(poly, spacing, shape, offset=0.5):
    """Row/column slice of a regular grid covering the polygon's bounding box.

    Grid point (r, c) sits at ((c + offset) * spacing, (r + offset) * spacing).
    """
    p = np.asarray(poly)
    rows, cols = shape
    c0 = max(int(math.floor(p[:, 0].min() / spacing - offset)), 0)
    c1 = min(int(math.ceil(p[:, 0].max() / spacing - offset)) + 1, cols)
    r0 = max(int(math.floor(p[:, 1].min() / spacing - offset)), 0)
    r1 = min(int(math.ceil(p[:, 1].max() / spacing - offset)) + 1, rows)
    return slice(r0, max(r0, r1)), slice(c0, max(c0, c1))


def rasterize_polygon(poly, spacing, shape, offset=0.5):
    """Boolean mask of grid points inside ``poly`` (nearest-sample at point centres)."""
    mask = np.zeros(shape, dtype=bool)
    rs, cs = polygon_window(poly, spacing, shape, offset)
    if rs.stop <= rs.start or cs.stop <= cs.start:
        return mask
    yy = (np.arange(rs.start, rs.stop) + offset) * spacing
    xx = (np.arange(cs.start, cs.stop) + offset) * spacing
    mask[rs, cs] = points_in_polygon(xx[None, :], yy[:, None], poly)
    return mask


def distance_to_polyline(x, y, polyline):
    """Euclidean distance from points to the nearest segment of ``polyline``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    pts = np.asarray(polyline, dtype=np.float64)
    best = np.full(np.broadcast(x, y).shape, np.inf)
    if len(pts) == 1:
        return np.hypot(x - pts[0, 0], y - pts[0, 1])
    for (x1, y1), (x2, y2) in zip(pts[:-1], pts[1:]):
        dx, dy = x2 - x1, y2 - y1
        L2 = dx * dx + dy * dy
        if L2 == 0:
            d = np.hypot(x - x1, y - y1)
        else:
            t = np.clip(((x - x1) * dx + (y - y1) * dy) / L2, 0.0, 1.0)
            d = np.hypot(x - (x1 + t * dx), y - (y1 + t * dy))
        best = np.minimum(best, d)
    return best


def largest_rectangle(mask):
    """Largest all-true axis-aligned block of a boolean grid as ``(r0, c0, r1, c1)``, end-exclusive.

    Row-wise histogram plus monotonic stack, O(rows * cols). Returns ``None``
    when the grid has no true cell.
    """
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        return None
    heights = np.zeros(m.shape[1] + 1, dtype=np.int64)  # trailing sentinel
    best, best_area = None, 0
    for r in range(m.shape[0]):
        heights[:-1] = np.where(m[r], heights[:-1] + 1, 0)
        stack = []
        for c, h in enumerate(heights):
            start = c
            while stack and stack[-1][1] >= h:
                start, sh = stack.pop()
                area = sh * (c - start)
                if area > best_area:
                    best_area, best = area, (r - sh + 1, start, r + 1, c)
            stack.append((start, h))
    return best
