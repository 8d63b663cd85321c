"""
The extremal approach-velocity problem.

Among vorticities with |w| <= 1 and L1 mass at most I, the approach
velocity u1(-eps, 0) - u1(eps, 0) of the points (+-eps, 0) is largest when
w = sgn(y1 y2) on the super-level set

    L_eps(a) = { y : |y1 y2| / (|(eps,0) - y|^2 |(-eps,0) - y|^2) >= a }

with a chosen so that |L_eps(a)| = I. For fixed y1 > 0 the kernel is a
unimodal function of y2 > 0, so every vertical cross section of the
first-quadrant part is an interval [lo(y1), hi(y1)] found by root finding,
and both the area and the approach velocity reduce to one-dimensional
adaptive quadratures over y1.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from core.interfaces import BracketError, DomainError, QuadratureError, ThresholdExceededError
from core.schemas import QuadratureSpec
from utils.config import get_config, worker_count
from utils.quadrature import quad_1d
from velocity.contour import field_velocity
from velocity.field import Patch, VorticityField

logger = logging.getLogger(__name__)

# Relative slack allowed in the bisection monotonicity assertion
MONOTONE_RTOL = 1e-7
MAX_BISECTIONS = 200
CONTAINMENT_SAMPLES = 257


@dataclass
class ExtremalResult:
    """
    Threshold level and approach velocity of the extremal configuration.

    approach_velocity is None until approach_velocity_extremal fills it in.
    """

    eps: float
    I: float
    a_threshold: float
    area: float
    approach_velocity: Optional[float] = None
    containment_radius: float = 0.0
    iterations: int = 0
    y1_range: Tuple[float, float] = (0.0, 0.0)
    quadrature_error: float = 0.0
    history: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def ratio(self) -> Optional[float]:
        """pi * approach_velocity / (4 eps |ln eps|), which tends to 1 as eps -> 0."""
        if self.approach_velocity is None:
            return None
        return math.pi * self.approach_velocity / (4.0 * self.eps * abs(math.log(self.eps)))


class SuperLevelProfile:
    """Cross sections of the first-quadrant part of L_eps(a)."""

    def __init__(self, eps: float, a: float):
        self.eps = eps
        self.a = a

    def _coefficients(self, y1: float) -> Tuple[float, float]:
        return (y1 - self.eps) ** 2, (y1 + self.eps) ** 2

    def kernel(self, y1: float, y2: float) -> float:
        A, B = self._coefficients(y1)
        t2 = y2 * y2
        return y1 * y2 / ((A + t2) * (B + t2))

    def peak(self, y1: float) -> float:
        """The maximizing y2 of the kernel at fixed y1 (root of 3t^4 + (A+B)t^2 - AB)."""
        A, B = self._coefficients(y1)
        S = A + B
        return math.sqrt(2.0 * A * B / (S + math.sqrt(S * S + 12.0 * A * B)))

    def peak_value(self, y1: float) -> float:
        t = self.peak(y1)
        if t == 0.0:
            return math.inf
        return self.kernel(y1, t)

    def section(self, y1: float) -> Tuple[float, float]:
        """The interval of y2 > 0 with kernel(y1, y2) >= a, or an empty (t, t) pair."""
        t = self.peak(y1)
        # kernel <= y1 / y2^3, so beyond this point it is below a
        upper = max(2.0 * t, 1.01 * (y1 / self.a) ** (1.0 / 3.0))
        f = lambda y2: self.kernel(y1, y2) - self.a
        if t == 0.0:
            return 0.0, brentq(f, upper * 1e-15, upper, xtol=1e-15 * upper, maxiter=200)
        if f(t) < 0.0:
            return t, t
        xtol = 1e-15 * upper
        lo = brentq(f, 0.0, t, xtol=xtol, maxiter=200)
        hi = brentq(f, t, upper, xtol=xtol, maxiter=200)
        return lo, hi

    def y1_range(self) -> Tuple[float, float]:
        """The interval of y1 on which the set has a non-empty cross section."""
        eps, a = self.eps, self.a
        g = lambda y1: self.peak_value(y1) - a
        inner = eps * (1.0 - 1e-8)
        left = brentq(g, 0.0, inner, xtol=1e-16 * eps, maxiter=200) if g(inner) > 0.0 else inner

        right = 2.0 * eps
        while g(right) >= 0.0:
            right *= 2.0
            if right > 1e12:
                raise BracketError(f"cross sections do not close off for eps={eps!r}, a={a!r}")
        start = eps * (1.0 + 1e-8)
        right = brentq(g, start, right, xtol=1e-15 * right, maxiter=200)
        return left, right


def _quadrant_area(profile: SuperLevelProfile, quad: QuadratureSpec) -> Tuple[float, float, Tuple[float, float]]:
    y1_lo, y1_hi = profile.y1_range()

    def width(y1: float) -> float:
        lo, hi = profile.section(y1)
        return hi - lo

    value, err = quad_1d(width, y1_lo, y1_hi, quad, points=[profile.eps])
    return value, err, (y1_lo, y1_hi)


def set_area(eps: float, a: float, quad: Optional[QuadratureSpec] = None) -> float:
    """|L_eps(a)|, four times the first-quadrant measure."""
    if not (eps > 0.0 and a > 0.0):
        raise DomainError(f"eps={eps!r} and a={a!r} must be positive")
    value, _, _ = _quadrant_area(SuperLevelProfile(eps, a), quad or QuadratureSpec.from_config())
    return 4.0 * value


def containment_radius(profile: SuperLevelProfile, y1_range: Tuple[float, float]) -> float:
    """Largest |y| over sampled cross-section tops of the first-quadrant set."""
    y1 = np.linspace(y1_range[0], y1_range[1], CONTAINMENT_SAMPLES)
    radius = float(y1_range[1])
    for v in y1[1:-1]:
        if v == profile.eps:
            continue
        _, hi = profile.section(float(v))
        radius = max(radius, math.hypot(float(v), hi))
    return radius


def _check_eps(eps: float, I: float) -> None:
    if not (eps > 0.0 and math.isfinite(eps)):
        raise DomainError(f"eps={eps!r} must be positive")
    if not I >= 1.0:
        raise DomainError(f"I={I!r} must be at least 1")
    threshold = float(get_config("estimates.small_eps_threshold", 0.05))
    if eps > threshold:
        raise ThresholdExceededError(f"eps={eps!r} above the smallness threshold {threshold!r}")


def superlevel_threshold(eps: float, I: float, tol: float = 1e-6,
                         quad: Optional[QuadratureSpec] = None) -> ExtremalResult:
    """
    Find a with |L_eps(a)| = I by bisection in ln a.

    Args:
        eps: Half distance of the two points, at most the smallness threshold
        I: Required area (L1 mass), at least 1
        tol: Relative area tolerance
        quad: Quadrature tolerances

    Returns:
        ExtremalResult without approach_velocity

    Raises:
        ThresholdExceededError: eps too large or the set leaves B_{10 sqrt(I)}
        BracketError: If the area cannot be bracketed or is not monotone in a
    """
    _check_eps(eps, I)
    if not tol > 0.0:
        raise DomainError(f"tol={tol!r} must be positive")
    quad = quad or QuadratureSpec.from_config()

    def area_of(a: float) -> Tuple[float, float]:
        value, err, _ = _quadrant_area(SuperLevelProfile(eps, a), quad)
        return 4.0 * value, 4.0 * err

    # the eps -> 0 limit of the set has area exactly 1/a
    a_lo, a_hi = 0.5 / I, 2.0 / I
    area_lo, _ = area_of(a_lo)
    for _ in range(60):
        if area_lo > I:
            break
        a_lo *= 0.5
        area_lo, _ = area_of(a_lo)
    else:
        raise BracketError(f"area stays below I={I!r} for eps={eps!r}")
    area_hi, _ = area_of(a_hi)
    for _ in range(60):
        if area_hi < I:
            break
        a_hi *= 2.0
        area_hi, _ = area_of(a_hi)
    else:
        raise BracketError(f"area stays above I={I!r} for eps={eps!r}")

    history = [(a_lo, area_lo), (a_hi, area_hi)]
    a_mid, area_mid, err_mid = a_lo, area_lo, 0.0
    for iteration in range(1, MAX_BISECTIONS + 1):
        a_mid = math.sqrt(a_lo * a_hi)
        area_mid, err_mid = area_of(a_mid)
        history.append((a_mid, area_mid))
        slack = MONOTONE_RTOL * I + err_mid
        if not (area_hi - slack <= area_mid <= area_lo + slack):
            raise BracketError(f"area not monotone in a near a={a_mid!r}: "
                               f"{area_lo!r} >= {area_mid!r} >= {area_hi!r} violated")
        if abs(area_mid - I) <= tol * I:
            break
        if area_mid > I:
            a_lo, area_lo = a_mid, area_mid
        else:
            a_hi, area_hi = a_mid, area_mid
    else:
        raise BracketError(f"bisection did not reach tol={tol!r} for eps={eps!r}, I={I!r}")

    profile = SuperLevelProfile(eps, a_mid)
    y1_range = profile.y1_range()
    radius = containment_radius(profile, y1_range)
    ball = 10.0 * math.sqrt(I)
    if radius > ball:
        raise ThresholdExceededError(f"L_eps(a) reaches |y|={radius:.6g} outside the ball of radius {ball:.6g}")

    logger.debug(f"eps={eps:.3g} I={I:g}: a={a_mid:.12g} area={area_mid:.12g} after {iteration} bisections")
    return ExtremalResult(eps=eps, I=I, a_threshold=a_mid, area=area_mid, containment_radius=radius,
                          iterations=iteration, y1_range=y1_range, quadrature_error=err_mid,
                          history=history)


def approach_velocity_bound(eps: float, I: float, C: float, m: Optional[float] = None) -> float:
    """
    Closed-form upper bound of the approach velocity of (+-eps, 0).

    Plain form (-4 ln eps + 4 ln(10 sqrt I) + 2 C pi) eps / pi; when the
    gradient bound m = min(1/|grad w|, 1) is given, the smaller of that and
    (-4 ln m + 4 ln(10 sqrt I) + (2C + 16) pi) eps / pi.
    """
    if not (0.0 < eps < 1.0):
        raise DomainError(f"eps={eps!r} outside (0, 1)")
    log_ball = 4.0 * math.log(10.0 * math.sqrt(I))
    plain = (-4.0 * math.log(eps) + log_ball + 2.0 * C * math.pi) / math.pi * eps
    if not m:
        return plain
    if not 0.0 < m <= 1.0:
        raise DomainError(f"m={m!r} outside (0, 1]")
    limited = (-4.0 * math.log(m) + log_ball + (2.0 * C + 16.0) * math.pi) / math.pi * eps
    return min(plain, limited)


def rate_bound(delta: float, m: Optional[float], CI: float) -> float:
    """
    Instantaneous approach velocity bound of two points at distance delta.

    Returns (2 min(-ln delta, -ln m) + CI) / pi * delta. m = 0 or None marks
    the gradient branch inactive (patches), leaving -ln delta.
    """
    if not (delta > 0.0 and math.isfinite(delta)):
        raise DomainError(f"delta={delta!r} must be positive and finite")
    if not math.isfinite(CI):
        raise DomainError(f"CI={CI!r} must be finite")
    log_term = -math.log(delta)
    if m:
        if not 0.0 < m <= 1.0:
            raise DomainError(f"m={m!r} outside (0, 1]")
        log_term = min(log_term, -math.log(m))
    return (2.0 * log_term + CI) / math.pi * delta


def approach_velocity_extremal(eps: float, I: float, quad: Optional[QuadratureSpec] = None,
                               tol: float = 1e-6, threshold: Optional[ExtremalResult] = None) -> ExtremalResult:
    """
    Approach velocity u1(-eps, 0) - u1(eps, 0) of the extremal vorticity.

    Evaluates (8 eps / pi) times the kernel integral over the first-quadrant
    part of L_eps(a). The inner y2 integral is done exactly:

        8 eps int_lo^hi k dy2 = ln[(A + hi^2)(B + lo^2) / ((B + hi^2)(A + lo^2))]

    with A = (y1 - eps)^2, B = (y1 + eps)^2.

    Raises:
        QuadratureError: If the outer quadrature does not converge
    """
    quad = quad or QuadratureSpec.from_config()
    result = threshold or superlevel_threshold(eps, I, tol, quad)
    profile = SuperLevelProfile(eps, result.a_threshold)

    def column(y1: float) -> float:
        lo, hi = profile.section(y1)
        if hi <= lo:
            return 0.0
        B = (y1 + eps) ** 2
        gap = 4.0 * eps * y1
        return math.log1p(-gap / (B + hi * hi)) - math.log1p(-gap / (B + lo * lo))

    scaled = quad.model_copy(update={"abs_tol": quad.abs_tol * eps})
    y1_lo, y1_hi = result.y1_range
    value, err = quad_1d(column, y1_lo, y1_hi, scaled, points=[eps])
    velocity = value / math.pi
    if not velocity > 0.0:
        raise QuadratureError(f"non-positive approach velocity for eps={eps!r}", velocity, err)
    result.approach_velocity = velocity
    result.quadrature_error = max(result.quadrature_error, err / math.pi)
    return result


def random_patch_field(rng: np.random.Generator, I: float, n_patches: int = 3,
                       extent: float = 0.8) -> VorticityField:
    """
    A random union of disjoint rectangles with |w| <= 1 and L1 mass at most I (images included).

    Rectangles sit in disjoint vertical strips of [0, extent] so they never
    overlap; the first strip touches the x2-axis.
    """
    edges = np.sort(rng.uniform(0.0, extent, n_patches - 1))
    edges = np.concatenate(([0.0], edges, [extent]))
    patches = []
    for x_lo, x_hi in zip(edges[:-1], edges[1:]):
        if x_hi - x_lo < 1e-3:
            continue
        y_lo, y_hi = np.sort(rng.uniform(0.0, extent, 2))
        if y_hi - y_lo < 1e-3:
            continue
        strength = float(rng.uniform(-1.0, 1.0))
        rect = np.array([[x_lo, y_lo], [x_hi, y_lo], [x_hi, y_hi], [x_lo, y_hi]])
        patches.append(Patch(rect, strength))
    if not patches:
        patches.append(Patch(np.array([[0.0, 0.0], [0.1, 0.0], [0.1, 0.1], [0.0, 0.1]]), 1.0))
    mass = sum(p.l1_mass for p in patches)
    if mass > I:
        patches = [Patch(p.contour, p.strength * I / mass) for p in patches]
    return VorticityField.build(patches)


def measured_approach_velocity(field: VorticityField, eps: float) -> float:
    """u1(-eps, 0) - u1(eps, 0) of a field by the contour formula."""
    u = field_velocity(field, np.array([[-eps, 0.0], [eps, 0.0]]))
    return float(u[0, 0] - u[1, 0])


def extremal_dominance(eps: float, I: float, extremal: ExtremalResult, n_fields: int = 10,
                       seed: int = 0) -> pd.DataFrame:
    """
    Compare random admissible fields against the extremal approach velocity.

    Returns:
        DataFrame with one row per random field (measured, extremal, margin)
    """
    if extremal.approach_velocity is None:
        raise DomainError("extremal result has no approach velocity")
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(n_fields):
        field_k = random_patch_field(rng, I, n_patches=int(rng.integers(1, 5)))
        measured = measured_approach_velocity(field_k, eps)
        rows.append({
            "field": k, "l1_mass": field_k.total_l1, "measured": measured,
            "extremal": extremal.approach_velocity,
            "margin": extremal.approach_velocity - measured,
        })
    return pd.DataFrame(rows)


def sweep(eps_values: Sequence[float], I_values: Sequence[float], C: float, CI: float,
          quad: Optional[QuadratureSpec] = None, tol: float = 1e-6) -> pd.DataFrame:
    """
    Extremal approach velocities over an eps x I grid.

    Cells are computed concurrently and assembled in grid order. Cells with
    eps above the smallness threshold carry status 'threshold_exceeded'.

    Returns:
        DataFrame with columns eps, I, a_threshold, area, approach_velocity,
        bound_value, ratio, plain_bound, status
    """
    quad = quad or QuadratureSpec.from_config()
    cells = [(float(e), float(i)) for i in I_values for e in eps_values]

    def run_cell(cell: Tuple[float, float]) -> Dict:
        eps, I = cell
        row = {"eps": eps, "I": I, "a_threshold": math.nan, "area": math.nan,
               "approach_velocity": math.nan, "bound_value": math.nan, "ratio": math.nan,
               "plain_bound": math.nan, "status": "pass"}
        try:
            result = approach_velocity_extremal(eps, I, quad, tol)
        except ThresholdExceededError as e:
            logger.warning(f"eps={eps!r}, I={I!r}: {e}")
            row["status"] = "threshold_exceeded"
            return row
        row.update({
            "a_threshold": result.a_threshold, "area": result.area,
            "approach_velocity": result.approach_velocity,
            # the pair (+-eps, 0) is at distance 2 eps
            "bound_value": rate_bound(2.0 * eps, None, CI),
            "ratio": result.ratio,
            "plain_bound": approach_velocity_bound(eps, I, C),
        })
        return row

    with ThreadPoolExecutor(max_workers=min(worker_count(), max(1, len(cells)))) as executor:
        rows = list(executor.map(run_cell, cells))
    return pd.DataFrame(rows, columns=["eps", "I", "a_threshold", "area", "approach_velocity",
                                       "bound_value", "ratio", "plain_bound", "status"])
