"""
Area-quadrature velocity and the main-term / remainder decomposition.

velocity_direct integrates the half-plane Biot-Savart kernel over each patch
in polar coordinates centred at the evaluation point, which absorbs the 1/r
singularity of the kernel into the area element. For fields odd in both
coordinates the symmetrized quadrant kernel

    u1(x) =  (2 x1 / pi) int [ y1 (x2 - y2) / (|x - y|^2 |x - y~|^2) - y1 (x2 + y2) / (|x - y_|^2 |x + y|^2) ] w dy
    u2(x) = -(2 x2 / pi) int [ y2 (x1 - y1) / (|x - y|^2 |x - y_|^2) - y2 (x1 + y1) / (|x - y~|^2 |x + y|^2) ] w dy

is used (y~ = (-y1, y2), y_ = (y1, -y2)); other flag combinations use the
plain image sum.

main_term evaluates (4/pi) int_{Q(|x|)} y1 y2 / |y|^4 w(y) dy in polar
coordinates about the origin with the radial integral done exactly, and
extract_b returns the remainders b_j = (-1)^j u_j / x_j - main_term.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.interfaces import DomainError
from core.schemas import Point, QuadratureSpec
from utils.config import get_config, worker_count
from utils.quadrature import dblquad_2d, quad_1d, quad_vector
from velocity.contour import field_velocity
from velocity.field import Patch, VorticityField

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def _ray_intervals(origin: np.ndarray, direction: np.ndarray, vertices: np.ndarray) -> List[Tuple[float, float]]:
    """
    Radial intervals of the ray origin + r*direction (r > 0) inside the polygon.

    Each segment is half-open at its end vertex so a crossing through a
    vertex is counted once.
    """
    a = vertices
    d = np.roll(a, -1, axis=0) - a
    denom = direction[0] * d[:, 1] - direction[1] * d[:, 0]
    wx = a[:, 0] - origin[0]
    wy = a[:, 1] - origin[1]
    ok = denom != 0.0
    safe = np.where(ok, denom, 1.0)
    rho = (wx * d[:, 1] - wy * d[:, 0]) / safe
    tau = (wx * direction[1] - wy * direction[0]) / safe
    hits = np.sort(rho[ok & (tau >= 0.0) & (tau < 1.0) & (rho > 0.0)])
    if len(hits) % 2 == 1:
        hits = np.concatenate(([0.0], hits))
    return [(float(hits[i]), float(hits[i + 1])) for i in range(0, len(hits) - 1, 2)]


def _vertex_angles(origin: np.ndarray, vertices: np.ndarray, lo: float, hi: float) -> List[float]:
    angles = np.mod(np.arctan2(vertices[:, 1] - origin[1], vertices[:, 0] - origin[0]), TWO_PI)
    return [float(t) for t in angles if lo < t < hi]


def _circle_angles(radius: float, vertices: np.ndarray, lo: float, hi: float) -> List[float]:
    """Polar angles where the circle |y| = radius crosses the polygon boundary."""
    a = vertices
    d = np.roll(a, -1, axis=0) - a
    qa = np.sum(d * d, axis=1)
    qb = 2.0 * np.sum(a * d, axis=1)
    qc = np.sum(a * a, axis=1) - radius * radius
    disc = qb * qb - 4.0 * qa * qc
    ok = (qa > 0.0) & (disc >= 0.0)
    root = np.sqrt(np.where(ok, disc, 0.0))
    safe = np.where(ok, qa, 1.0)
    angles = []
    for tau in ((-qb - root) / (2.0 * safe), (-qb + root) / (2.0 * safe)):
        hit = ok & (tau >= 0.0) & (tau <= 1.0)
        pts = a[hit] + tau[hit][:, None] * d[hit]
        angles.extend(float(t) for t in np.arctan2(pts[:, 1], pts[:, 0]) if lo < t < hi)
    return angles


def _quadrant_kernel(x1: float, x2: float, y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
    """Symmetrized kernel for fields odd in both coordinates, per unit vorticity."""
    d_direct = (x1 - y1) ** 2 + (x2 - y2) ** 2
    d_mirror1 = (x1 + y1) ** 2 + (x2 - y2) ** 2
    d_mirror2 = (x1 - y1) ** 2 + (x2 + y2) ** 2
    d_double = (x1 + y1) ** 2 + (x2 + y2) ** 2
    k1 = y1 * (x2 - y2) / (d_direct * d_mirror1) - y1 * (x2 + y2) / (d_mirror2 * d_double)
    k2 = y2 * (x1 - y1) / (d_direct * d_mirror2) - y2 * (x1 + y1) / (d_mirror1 * d_double)
    return np.array([2.0 * x1 / math.pi * k1, -2.0 * x2 / math.pi * k2])


def _image_kernel(x1: float, x2: float, y1: float, y2: float, odd_x1: bool, odd_x2: bool) -> np.ndarray:
    """Biot-Savart kernel summed over the odd images, per unit vorticity."""
    sources = [(y1, y2, 1.0)]
    if odd_x1:
        sources.append((-y1, y2, -1.0))
    if odd_x2:
        sources.append((y1, -y2, -1.0))
    if odd_x1 and odd_x2:
        sources.append((-y1, -y2, 1.0))
    u = np.zeros(2)
    for s1, s2, sign in sources:
        z1, z2 = x1 - s1, x2 - s2
        r2 = z1 * z1 + z2 * z2
        u[0] += sign * z2 / r2
        u[1] -= sign * z1 / r2
    return u / TWO_PI


def _patch_direct(patch: Patch, x: np.ndarray, quad: QuadratureSpec) -> np.ndarray:
    vertices = patch.contour
    flags = patch.symmetry
    quadrant_form = flags.odd_x1 and flags.odd_x2 and x[0] >= 0.0 and x[1] >= 0.0
    r_sing = quad.singularity_radius

    def kernel(y1: float, y2: float) -> np.ndarray:
        if quadrant_form:
            return _quadrant_kernel(x[0], x[1], y1, y2)
        return _image_kernel(x[0], x[1], y1, y2, flags.odd_x1, flags.odd_x2)

    def angular(phi: float) -> np.ndarray:
        direction = np.array([math.cos(phi), math.sin(phi)])
        total = np.zeros(2)
        for r_lo, r_hi in _ray_intervals(x, direction, vertices):
            breaks = [r_sing] if r_lo < r_sing < r_hi else None
            value, _ = quad_vector(
                lambda r: r * kernel(x[0] + r * direction[0], x[1] + r * direction[1]),
                r_lo, r_hi, quad, points=breaks)
            total += value
        return total

    breaks = _vertex_angles(x, vertices, 0.0, TWO_PI)
    value, _ = quad_vector(angular, 0.0, TWO_PI, quad, points=breaks)
    return patch.strength * value


def velocity_direct(field: VorticityField, x: Point, quad: Optional[QuadratureSpec] = None) -> Point:
    """
    Velocity at x by adaptive area quadrature of the half-plane Biot-Savart law.

    Args:
        field: Vorticity field whose patches carry the odd_x1 image
        x: Evaluation point in the closed upper half-plane
        quad: Quadrature tolerances

    Returns:
        Velocity vector as a Point

    Raises:
        DomainError: If a patch lacks odd_x1, x2 < 0, or x is a contour vertex
        QuadratureError: If quadrature does not converge
    """
    quad = quad or QuadratureSpec.from_config()
    if not field.odd_x1:
        raise DomainError("velocity_direct requires fields odd in x1")
    if x.x2 < 0.0:
        raise DomainError(f"point ({x.x1!r}, {x.x2!r}) is outside the closed upper half-plane")
    xa = np.array([x.x1, x.x2])
    for patch in field.patches:
        if np.any(np.all(patch.contour == xa, axis=1)):
            raise DomainError(f"point ({x.x1!r}, {x.x2!r}) is a contour vertex")

    u = np.zeros(2)
    for patch in field.patches:
        if patch.strength != 0.0:
            u += _patch_direct(patch, xa, quad)
    return Point(x1=float(u[0]), x2=float(u[1]))


def _require_quadrant_field(field: VorticityField) -> None:
    if not field.all_odd:
        raise DomainError("the decomposition requires fields odd in both coordinates")


def main_term(field: VorticityField, x: Point, quad: Optional[QuadratureSpec] = None) -> float:
    """
    (4/pi) * integral over Q(|x|) of y1 y2 / |y|^4 * w(y) dy.

    Raises:
        DomainError: If x = 0, x leaves the closed first quadrant, or the field is not doubly odd
    """
    quad = quad or QuadratureSpec.from_config()
    _require_quadrant_field(field)
    if x.x1 < 0.0 or x.x2 < 0.0 or (x.x1 == 0.0 and x.x2 == 0.0):
        raise DomainError(f"main_term needs x in the closed first quadrant minus the origin, got ({x.x1!r}, {x.x2!r})")
    r0 = x.norm
    origin = np.zeros(2)
    half_pi = 0.5 * math.pi
    total = 0.0
    for patch in field.patches:
        if patch.strength == 0.0:
            continue
        vertices = patch.contour

        def angular(theta: float) -> float:
            c, s = math.cos(theta), math.sin(theta)
            radial = 0.0
            for r_lo, r_hi in _ray_intervals(origin, np.array([c, s]), vertices):
                if r_hi > r0:
                    radial += math.log(r_hi / max(r_lo, r0))
            return c * s * radial

        breaks = _vertex_angles(origin, vertices, 0.0, half_pi) + _circle_angles(r0, vertices, 0.0, half_pi)
        value, _ = quad_1d(angular, 0.0, half_pi, quad, points=breaks)
        total += patch.strength * value
    return 4.0 / math.pi * total


def extract_b(field: VorticityField, x: Point, quad: Optional[QuadratureSpec] = None) -> Tuple[float, float]:
    """
    Remainders b_j = (-1)^j u_j(x) / x_j - main_term(x), j = 1, 2.

    The velocity comes from the contour formula.

    Raises:
        DomainError: If x is not in the open first quadrant
    """
    x.require_open_quadrant()
    _require_quadrant_field(field)
    u = field_velocity(field, np.array([[x.x1, x.x2]]))[0]
    m = main_term(field, x, quad)
    return -u[0] / x.x1 - m, u[1] / x.x2 - m


def log_bound_factor(x1: float, x2: float) -> Tuple[float, float]:
    """1 + ln((x1 + x2) / x_j) for j = 1, 2."""
    return 1.0 + math.log((x1 + x2) / x1), 1.0 + math.log((x1 + x2) / x2)


def domain_difference_integral(x: Point, quad: Optional[QuadratureSpec] = None) -> Tuple[float, float]:
    """
    Integral of y1 y2 / |y|^4 over D = [(0, 2r) x (r/2, inf)] U [(r/2, inf) x (0, 2r)], r = |x|.

    Computed as the two strips minus their overlap square.

    Returns:
        Tuple (value, error estimate)
    """
    quad = quad or QuadratureSpec.from_config()
    r = x.norm
    if not r > 0.0:
        raise DomainError("domain difference integral needs x != 0")

    def kernel(y2: float, y1: float) -> float:
        rr = y1 * y1 + y2 * y2
        return y1 * y2 / (rr * rr)

    vertical, e1 = dblquad_2d(kernel, 0.0, 2.0 * r, lambda _: 0.5 * r, lambda _: np.inf, quad)
    horizontal, e2 = dblquad_2d(kernel, 0.5 * r, np.inf, lambda _: 0.0, lambda _: 2.0 * r, quad)
    overlap, e3 = dblquad_2d(kernel, 0.5 * r, 2.0 * r, lambda _: 0.5 * r, lambda _: 2.0 * r, quad)
    return vertical + horizontal - overlap, e1 + e2 + e3


@dataclass
class KernelConstantFit:
    """Result of fitting the decomposition constant C over a battery."""

    C: float
    max_ratio: float
    safety: float
    rows: pd.DataFrame


def fit_grid(n: int, lo: float, hi: float) -> np.ndarray:
    """(n*n, 2) log-spaced evaluation points in [lo, hi]^2."""
    axis = np.geomspace(lo, hi, n)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


def _b_rows(name: str, field: VorticityField, points: np.ndarray, quad: QuadratureSpec) -> List[Dict]:
    u = field_velocity(field, points)
    rows = []
    for (x1, x2), (u1, u2) in zip(points, u):
        m = main_term(field, Point(x1=float(x1), x2=float(x2)), quad)
        b1 = -u1 / x1 - m
        b2 = u2 / x2 - m
        f1, f2 = log_bound_factor(x1, x2)
        rows.append({
            "field": name, "x1": float(x1), "x2": float(x2), "u1": float(u1), "u2": float(u2),
            "main_term": m, "b1": float(b1), "b2": float(b2),
            "ratio1": abs(b1) / f1, "ratio2": abs(b2) / f2,
        })
    return rows


def fit_kernel_constant(fields: Dict[str, VorticityField], grid: np.ndarray,
                       quad: Optional[QuadratureSpec] = None,
                       safety: Optional[float] = None) -> KernelConstantFit:
    """
    Fit C = max(1, safety * max |b_j| / (1 + ln((x1 + x2) / x_j))) over fields and grid points.

    Fields are processed concurrently and gathered in input order.
    """
    quad = quad or QuadratureSpec.from_config()
    safety = float(safety or get_config("kernel.fit_safety", 1.5))
    names = list(fields)
    with ThreadPoolExecutor(max_workers=min(worker_count(), max(1, len(names)))) as executor:
        per_field = list(executor.map(lambda n: _b_rows(n, fields[n], grid, quad), names))
    rows = pd.DataFrame([row for chunk in per_field for row in chunk])
    max_ratio = float(max(rows["ratio1"].max(), rows["ratio2"].max())) if len(rows) else 0.0
    C = max(1.0, safety * max_ratio)
    logger.info(f"Fitted decomposition constant C={C:.6g} (max ratio {max_ratio:.6g}, safety {safety})")
    return KernelConstantFit(C=C, max_ratio=max_ratio, safety=safety, rows=rows)


def far_field_decay(field: VorticityField, radii: Sequence[float] = (10.0, 100.0),
                    angle: float = 0.7) -> Dict[str, float]:
    """
    Compare |u| at the given radii with the 1/|x|^2 law fitted at the first radius.

    Returns:
        Dictionary with the fitted constant, the speeds and the ratio of the
        last speed to the fitted law
    """
    direction = np.array([math.cos(angle), math.sin(angle)])
    pts = np.array([r * direction for r in radii])
    speeds = np.hypot(*field_velocity(field, pts).T)
    const = float(speeds[0] * radii[0] ** 2)
    predicted = const / radii[-1] ** 2
    return {
        "constant": const,
        "speed_first": float(speeds[0]),
        "speed_last": float(speeds[-1]),
        "ratio": float(speeds[-1] / predicted) if predicted > 0 else 0.0,
    }
