"""
Contour-dynamics velocity for piecewise-constant vorticity.

For a patch P of strength w0 bounded by a counterclockwise polygon, the
Biot-Savart area integral reduces to a boundary integral of ln|x - y|:

    u(x) = (w0 / 2 pi) * sum over segments of e_seg * integral_seg ln|x - y| ds

and each segment integral has the closed form F(L - p) - F(-p) with
F(v) = v ln(v^2 + q^2)/2 - v + q atan(v/q), where p and q are the
along- and across-segment coordinates of x. The antiderivative is
continuous across the segment, so points on the contour need no special
treatment.

Odd images are evaluated by reflecting the evaluation point instead of the
contour: with A, B, C, D the patch velocity at x, (-x1, x2), (x1, -x2) and
-x, the doubly odd field gives u1 = (A1 - B1) + (C1 - D1) and
u2 = (A2 - C2) + (B2 - D2), which vanish exactly on the respective axes.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Union

import numpy as np

from core.interfaces import VelocityEvaluator
from core.schemas import Point
from utils.config import get_config, worker_count
from velocity.field import Patch, VorticityField

logger = logging.getLogger(__name__)


def _antiderivative(v: np.ndarray, q_abs: np.ndarray) -> np.ndarray:
    r2 = v * v + q_abs * q_abs
    log_term = np.where(r2 > 0.0, 0.5 * v * np.log(np.where(r2 > 0.0, r2, 1.0)), 0.0)
    # |q| atan(v/|q|) written with arctan2 so q = 0 gives 0 without division
    return log_term - v + q_abs * np.arctan2(v, q_abs)


def patch_velocity(patch: Patch, points: np.ndarray) -> np.ndarray:
    """
    Velocity induced by the patch polygon alone (no images) at points.

    Args:
        patch: Vortex patch
        points: (M, 2) evaluation points

    Returns:
        (M, 2) velocities
    """
    a = patch.contour
    d = np.roll(a, -1, axis=0) - a
    lengths = np.hypot(d[:, 0], d[:, 1])
    keep = lengths > 0.0
    a, d, lengths = a[keep], d[keep], lengths[keep]
    e = d / lengths[:, None]

    w1 = points[:, 0][:, None] - a[:, 0][None, :]
    w2 = points[:, 1][:, None] - a[:, 1][None, :]
    p = w1 * e[:, 0][None, :] + w2 * e[:, 1][None, :]
    q = np.abs(w1 * e[:, 1][None, :] - w2 * e[:, 0][None, :])
    integrals = _antiderivative(lengths[None, :] - p, q) - _antiderivative(-p, q)

    scale = patch.strength / (2.0 * math.pi)
    u1 = np.sum(integrals * e[:, 0][None, :], axis=1)
    u2 = np.sum(integrals * e[:, 1][None, :], axis=1)
    return scale * np.stack([u1, u2], axis=1)


def field_velocity(field: VorticityField, points: np.ndarray) -> np.ndarray:
    """Velocity of the field, images included, at an (M, 2) array of points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.zeros_like(pts)
    if len(pts) == 0:
        return out
    x1, x2 = pts[:, 0], pts[:, 1]
    mirror_x1 = np.stack([-x1, x2], axis=1)
    mirror_x2 = np.stack([x1, -x2], axis=1)
    mirror_both = np.stack([-x1, -x2], axis=1)
    m = len(pts)

    for patch in field.patches:
        if patch.strength == 0.0:
            continue
        flags = patch.symmetry
        if flags.odd_x1 and flags.odd_x2:
            vals = patch_velocity(patch, np.vstack([pts, mirror_x1, mirror_x2, mirror_both]))
            A, B, C, D = vals[:m], vals[m:2 * m], vals[2 * m:3 * m], vals[3 * m:]
            out[:, 0] += (A[:, 0] - B[:, 0]) + (C[:, 0] - D[:, 0])
            out[:, 1] += (A[:, 1] - C[:, 1]) + (B[:, 1] - D[:, 1])
        elif flags.odd_x1:
            vals = patch_velocity(patch, np.vstack([pts, mirror_x1]))
            A, B = vals[:m], vals[m:]
            out[:, 0] += A[:, 0] - B[:, 0]
            out[:, 1] += A[:, 1] + B[:, 1]
        elif flags.odd_x2:
            vals = patch_velocity(patch, np.vstack([pts, mirror_x2]))
            A, C = vals[:m], vals[m:]
            out[:, 0] += A[:, 0] + C[:, 0]
            out[:, 1] += A[:, 1] - C[:, 1]
        else:
            out += patch_velocity(patch, pts)
    return out


class ContourVelocity(VelocityEvaluator):
    """
    Batched contour-integral velocity evaluator.

    Points are split into fixed-size chunks that are evaluated by a thread
    pool and gathered in order. Chunk boundaries depend only on the chunk
    size, so threaded and sequential evaluation agree bitwise.
    """

    def __init__(self, field: VorticityField, chunk_size: Optional[int] = None,
                 threads: Optional[int] = None):
        self.field = field
        self.chunk_size = int(chunk_size or get_config("batch.chunk_size", 256))
        self.threads = int(threads or worker_count())
        self.logger = logging.getLogger(__name__)
        self.skipped_segments = field.degenerate_segments
        if self.skipped_segments:
            self.logger.warning(f"Skipping {self.skipped_segments} degenerate segment(s) in velocity evaluation")

    def velocity(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(pts) == 0:
            return np.zeros((0, 2))
        chunks = [pts[i:i + self.chunk_size] for i in range(0, len(pts), self.chunk_size)]
        if self.threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=min(self.threads, len(chunks))) as executor:
                results = list(executor.map(lambda c: field_velocity(self.field, c), chunks))
        else:
            results = [field_velocity(self.field, c) for c in chunks]
        return np.vstack(results)


def velocity_contour(field: VorticityField, x: Point) -> Point:
    """Velocity at a single point by the contour formula."""
    u = field_velocity(field, np.array([[x.x1, x.x2]]))
    return Point(x1=float(u[0, 0]), x2=float(u[0, 1]))


def velocity_batch(field: VorticityField, points: Union[Sequence[Point], np.ndarray],
                   threads: Optional[int] = None) -> List[Point]:
    """Velocities at many points, evaluated concurrently, in input order."""
    if isinstance(points, np.ndarray):
        arr = points.reshape(-1, 2)
    else:
        arr = np.array([[p.x1, p.x2] for p in points], dtype=float).reshape(-1, 2)
    u = ContourVelocity(field, threads=threads).velocity(arr)
    return [Point(x1=float(a), x2=float(b)) for a, b in u]
