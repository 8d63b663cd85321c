"""
Polygon geometry on (N, 2) vertex arrays: signed area, orientation,
containment, segment intersection and local shape measures.

Vertices are stored without repeating the first vertex at the end; the
closing segment runs from the last vertex back to the first.
"""

from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree

from core.interfaces import DomainError


def as_vertices(vertices) -> np.ndarray:
    """Return a float (N, 2) array copy of vertices."""
    arr = np.array(vertices, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError(f"expected an (N, 2) vertex array, got shape {arr.shape}")
    return arr


def segments(vertices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Start and end points of the closed polygon's segments."""
    return vertices, np.roll(vertices, -1, axis=0)


def signed_area(vertices: np.ndarray) -> float:
    """Shoelace signed area; positive for counterclockwise polygons."""
    x = vertices[:, 0]
    y = vertices[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def segment_lengths(vertices: np.ndarray) -> np.ndarray:
    a, b = segments(vertices)
    return np.hypot(b[:, 0] - a[:, 0], b[:, 1] - a[:, 1])


def turning_angles(vertices: np.ndarray) -> np.ndarray:
    """Absolute turning angle (radians) at each vertex between incoming and outgoing segments."""
    prev = vertices - np.roll(vertices, 1, axis=0)
    nxt = np.roll(vertices, -1, axis=0) - vertices
    cross = prev[:, 0] * nxt[:, 1] - prev[:, 1] * nxt[:, 0]
    dot = prev[:, 0] * nxt[:, 0] + prev[:, 1] * nxt[:, 1]
    return np.abs(np.arctan2(cross, dot))


def points_in_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """
    Crossing-number containment test for many points.

    An upward edge includes its start and excludes its end, a downward edge
    the reverse, horizontal edges are skipped, and crossings must lie
    strictly to the right of the point.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a, b = segments(vertices)
    x1, y1 = a[:, 0][None, :], a[:, 1][None, :]
    x2, y2 = b[:, 0][None, :], b[:, 1][None, :]
    X = pts[:, 0][:, None]
    Y = pts[:, 1][:, None]
    upward = (y1 < y2) & (y1 <= Y) & (Y < y2)
    downward = (y1 > y2) & (y1 > Y) & (Y >= y2)
    straddle = upward | downward
    dy = np.where(straddle, y2 - y1, 1.0)
    x0 = x1 + (x2 - x1) * (Y - y1) / dy
    crossings = straddle & (X < x0)
    return (np.count_nonzero(crossings, axis=1) % 2) == 1


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_segment(ax, ay, bx, by, cx, cy):
    return ((np.minimum(ax, bx) <= cx) & (cx <= np.maximum(ax, bx))
            & (np.minimum(ay, by) <= cy) & (cy <= np.maximum(ay, by)))


def segments_intersect(p1: np.ndarray, p2: np.ndarray, q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """
    Elementwise test whether segments p1-p2 and q1-q2 share a point.

    All inputs are (K, 2) arrays; touching and collinear overlap count.
    """
    d1 = _orient(q1[:, 0], q1[:, 1], q2[:, 0], q2[:, 1], p1[:, 0], p1[:, 1])
    d2 = _orient(q1[:, 0], q1[:, 1], q2[:, 0], q2[:, 1], p2[:, 0], p2[:, 1])
    d3 = _orient(p1[:, 0], p1[:, 1], p2[:, 0], p2[:, 1], q1[:, 0], q1[:, 1])
    d4 = _orient(p1[:, 0], p1[:, 1], p2[:, 0], p2[:, 1], q2[:, 0], q2[:, 1])
    proper = (((d1 > 0) & (d2 < 0)) | ((d1 < 0) & (d2 > 0))) & \
             (((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0)))
    touch = ((d1 == 0) & _on_segment(q1[:, 0], q1[:, 1], q2[:, 0], q2[:, 1], p1[:, 0], p1[:, 1])) | \
            ((d2 == 0) & _on_segment(q1[:, 0], q1[:, 1], q2[:, 0], q2[:, 1], p2[:, 0], p2[:, 1])) | \
            ((d3 == 0) & _on_segment(p1[:, 0], p1[:, 1], p2[:, 0], p2[:, 1], q1[:, 0], q1[:, 1])) | \
            ((d4 == 0) & _on_segment(p1[:, 0], p1[:, 1], p2[:, 0], p2[:, 1], q2[:, 0], q2[:, 1]))
    return proper | touch


def _candidate_pairs(mid: np.ndarray, radius: float) -> np.ndarray:
    if len(mid) < 2 or radius <= 0.0:
        return np.empty((0, 2), dtype=int)
    return cKDTree(mid).query_pairs(r=radius * (1.0 + 1e-12), output_type="ndarray")


def is_simple(vertices: np.ndarray) -> bool:
    """
    True if no two non-adjacent segments of the closed polygon intersect.

    Zero-length segments are ignored. Candidate pairs come from a k-d tree
    over segment midpoints, since two segments can only meet when their
    midpoints are within the larger segment length of each other.
    """
    lengths = segment_lengths(vertices)
    keep = np.flatnonzero(lengths > 0.0)
    n = len(keep)
    if n < 3:
        return False
    a, b = segments(vertices)
    a, b = a[keep], b[keep]
    mid = 0.5 * (a + b)
    pairs = _candidate_pairs(mid, float(np.max(lengths[keep])))
    if len(pairs) == 0:
        return True
    i, j = pairs[:, 0], pairs[:, 1]
    # neighbours in the reduced segment list share a vertex
    adjacent = (np.abs(i - j) == 1) | (np.abs(i - j) == n - 1)
    i, j = i[~adjacent], j[~adjacent]
    if len(i) == 0:
        return True
    return not bool(np.any(segments_intersect(a[i], b[i], a[j], b[j])))


def polygons_cross(va: np.ndarray, vb: np.ndarray) -> bool:
    """True if any segment of polygon va meets any segment of polygon vb."""
    a1, a2 = segments(va)
    b1, b2 = segments(vb)
    ia, ib = np.meshgrid(np.arange(len(va)), np.arange(len(vb)), indexing="ij")
    ia, ib = ia.ravel(), ib.ravel()
    return bool(np.any(segments_intersect(a1[ia], a2[ia], b1[ib], b2[ib])))


def distance_to_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to the polygon boundary."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a, b = segments(vertices)
    d = b - a
    len2 = np.maximum(np.sum(d * d, axis=1), np.finfo(float).tiny)
    w = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.sum(w * d[None, :, :], axis=2) / len2[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * d[None, :, :]
    return np.min(np.hypot(pts[:, None, 0] - closest[:, :, 0], pts[:, None, 1] - closest[:, :, 1]), axis=1)
