"""
Profile functions and region geometry of the barrier construction.

The profile g(s) = s * exp(|ln s|^(1/2)) bounds the region
Omega_eps = {eps < x1 < 1/e, 0 < x2 < g(x1)}, which the barrier argument
shrinks self-similarly. This module evaluates g, g' and f, the region
predicates Omega_eps, Q(r) and D_s, the angular-average function h, the
s0 search and the derived constants rho0, C' and C_I.

h is computed in the variable lam = |ln s| so that values of s below the
double-precision range can still be evaluated.
"""

import logging
import math
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from core.interfaces import DomainError, NoAdmissibleS0Error
from core.schemas import E_INV, E_INV4, Point, ProfileConstants, QuadratureSpec
from utils.config import get_config
from utils.quadrature import quad_1d

logger = logging.getLogger(__name__)

# Angular cap beyond u_a in the h integral; the integrand decays like exp(-2u)
ANGLE_CAP = 40.0


def _require_profile_domain(s: float, name: str = "s") -> float:
    if not (0.0 < s <= E_INV) or not math.isfinite(s):
        raise DomainError(f"{name}={s!r} outside (0, e^-1]")
    return float(s)


def eval_g(s: float) -> float:
    """g(s) = s * exp(|ln s|^(1/2)) on (0, e^-1]."""
    s = _require_profile_domain(s)
    return s * math.exp(math.sqrt(-math.log(s)))


def eval_g_prime(s: float) -> float:
    """g'(s) = exp(|ln s|^(1/2)) * (1 - 1/(2 |ln s|^(1/2))) on (0, e^-1]."""
    s = _require_profile_domain(s)
    root = math.sqrt(-math.log(s))
    return math.exp(root) * (1.0 - 1.0 / (2.0 * root))


def eval_f(s: float) -> float:
    """f(s) = 2 + |ln s|^(1/2) on (0, 1)."""
    if not (0.0 < s < 1.0) or not math.isfinite(s):
        raise DomainError(f"s={s!r} outside (0, 1)")
    return 2.0 + math.sqrt(-math.log(s))


def g_values(s: np.ndarray) -> np.ndarray:
    """Vectorized g for arrays already known to lie in (0, e^-1]."""
    s = np.asarray(s, dtype=float)
    return s * np.exp(np.sqrt(-np.log(s)))


def g_prime_values(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    root = np.sqrt(-np.log(s))
    return np.exp(root) * (1.0 - 0.5 / root)


def log_g_ratio(s: float) -> float:
    """|ln g(s)| / |ln s|, which tends to 1 as s -> 0."""
    return abs(math.log(eval_g(s))) / abs(math.log(s))


# Region predicates

def omega_region_contains(eps: float, p: Point) -> bool:
    """True iff eps < x1 < 1/e and 0 < x2 < g(x1)."""
    if not (eps < p.x1 < E_INV):
        return False
    if p.x1 <= 0.0:
        return False
    return 0.0 < p.x2 < eval_g(p.x1)


def omega_region_mask(eps: float, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Vectorized omega_region_contains; non-finite coordinates are outside."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    inside = (x1 > max(eps, 0.0)) & (x1 < E_INV) & (x2 > 0.0) & np.isfinite(x2)
    out = np.zeros(x1.shape, dtype=bool)
    if np.any(inside):
        out[inside] = x2[inside] < g_values(x1[inside])
    return out


def q_region_contains(r: float, p: Point) -> bool:
    """True iff p is in the open first quadrant with |p| > r."""
    if not r > 0.0:
        raise DomainError(f"radius r={r!r} must be positive")
    return p.in_open_quadrant() and p.norm > r


def inner_radius(s: float) -> float:
    """sqrt(s^2 + g(s)^2), the inner radius of D_s."""
    return math.hypot(s, eval_g(s))


def d_region_contains(s: float, p: Point) -> bool:
    """Membership in D_s = Omega_0 intersected with Q(sqrt(s^2+g(s)^2)) and B_{1/e}(0)."""
    if not (0.0 < s <= E_INV4):
        raise DomainError(f"s={s!r} outside (0, e^-4]")
    if not q_region_contains(inner_radius(s), p):
        return False
    if p.norm >= E_INV:
        return False
    return omega_region_contains(0.0, p)


# The function h

def _log_inner_radius(lam: float) -> float:
    """ln sqrt(s^2 + g(s)^2) for s = exp(-lam)."""
    root = math.sqrt(lam)
    return -lam + root + 0.5 * math.log1p(math.exp(-2.0 * root))


def _log_r_max(u: float) -> float:
    """Log of the largest radius inside Omega_0 along the ray at angle atan(exp(u)), u > 0."""
    return -u * u + u + 0.5 * math.log1p(math.exp(-2.0 * u))


@lru_cache(maxsize=1)
def _u_ball_edge() -> float:
    """The u at which the graph of g crosses the circle |y| = 1/e."""
    return brentq(lambda u: _log_r_max(u) + 1.0, 0.0, 3.0, xtol=1e-15, rtol=4.5e-16)


def h_integral(lam: float, quad: Optional[QuadratureSpec] = None) -> Tuple[float, float]:
    """
    The integral of y1*y2/|y|^4 over D_s for s = exp(-lam).

    In polar coordinates the radial integral is logarithmic and done
    exactly; the remaining angular integral is taken in u = ln tan(theta).

    Args:
        lam: |ln s|, positive
        quad: Quadrature tolerances

    Returns:
        Tuple (value, error estimate); (0, 0) when D_s is empty
    """
    if not (lam > 0.0) or not math.isfinite(lam):
        raise DomainError(f"lam={lam!r} must be positive and finite")
    quad = quad or QuadratureSpec.from_config()
    log_rs = _log_inner_radius(lam)
    if log_rs >= -1.0:
        return 0.0, 0.0

    u_a = _u_ball_edge()
    t_a2 = math.exp(2.0 * u_a)
    # Angles below u_a: rays leave D_s through the circle |y| = 1/e
    head = 0.5 * (t_a2 / (1.0 + t_a2)) * (-1.0 - log_rs)

    u_cap = u_a + ANGLE_CAP
    if _log_r_max(u_cap) >= log_rs:
        u_b = u_cap
    else:
        u_b = brentq(lambda u: _log_r_max(u) - log_rs, u_a, u_cap, xtol=1e-14)

    def integrand(u: float) -> float:
        t2 = math.exp(2.0 * u)
        return t2 / (1.0 + t2) ** 2 * (_log_r_max(u) - log_rs)

    tail, error = quad_1d(integrand, u_a, u_b, quad)
    return head + tail, error


def h_times_log(lam: float, quad: Optional[QuadratureSpec] = None) -> float:
    """h(s)*|ln s| for s = exp(-lam), defined on (0, inf); zero where D_s is empty."""
    value, _ = h_integral(lam, quad)
    return 4.0 / math.pi * value


def compute_h_log(lam: float, quad: Optional[QuadratureSpec] = None) -> float:
    """h(s) for s = exp(-lam), lam >= 4."""
    if not lam >= 4.0 - 1e-12:
        raise DomainError(f"lam={lam!r} below 4 (s above e^-4)")
    return h_times_log(lam, quad) / lam


def compute_h(s: float, quad: Optional[QuadratureSpec] = None) -> float:
    """
    h(s) = (4 / (pi |ln s|)) * integral over D_s of y1*y2/|y|^4.

    Args:
        s: Value in (0, e^-4]
        quad: Quadrature tolerances

    Returns:
        Positive value of h(s)

    Raises:
        DomainError: If s is outside (0, e^-4]
        QuadratureError: If the angular quadrature does not converge
    """
    if not (0.0 < s <= E_INV4):
        raise DomainError(f"s={s!r} outside (0, e^-4]")
    return compute_h_log(-math.log(s), quad)


# s0 and derived constants

def s0_grid(points_per_decade: Optional[int] = None, floor: Optional[float] = None) -> np.ndarray:
    """Decreasing log-spaced candidate grid from e^-4 down to floor."""
    ppd = int(points_per_decade or get_config("regions.points_per_decade", 32))
    floor = float(floor or get_config("regions.grid_floor", 1e-300))
    if ppd < 1 or not (0.0 < floor < E_INV4):
        raise DomainError(f"invalid s0 grid parameters ({ppd}, {floor!r})")
    decades = math.log10(E_INV4 / floor)
    count = int(math.floor(decades * ppd)) + 1
    return E_INV4 * 10.0 ** (-np.arange(count) / ppd)


def find_s0(C: float, quad: Optional[QuadratureSpec] = None,
            grid: Optional[Sequence[float]] = None) -> float:
    """
    Largest grid value s0 with h(s)|ln s| >= C f(s) at every grid point s <= s0.

    The grid is scanned from its small end; the scan stops at the first
    failure.

    Raises:
        DomainError: If C < 1 or the grid is empty, not decreasing or outside (0, e^-4]
        NoAdmissibleS0Error: If the inequality fails at the smallest grid point
    """
    if not C >= 1.0:
        raise DomainError(f"C={C!r} must be at least 1")
    values = np.asarray(s0_grid() if grid is None else grid, dtype=float)
    if values.size == 0:
        raise DomainError("s0 grid is empty")
    if np.any(values <= 0.0) or np.any(values > E_INV4):
        raise DomainError("s0 grid values must lie in (0, e^-4]")
    if values.size > 1 and np.any(np.diff(values) >= 0.0):
        raise DomainError("s0 grid must be strictly decreasing")

    quad = quad or QuadratureSpec.from_config()
    for i in range(values.size - 1, -1, -1):
        s = float(values[i])
        lam = -math.log(s)
        if h_times_log(lam, quad) < C * eval_f(s):
            if i == values.size - 1:
                raise NoAdmissibleS0Error(f"no admissible s0 on grid (C={C!r}, smallest s={s!r})")
            s0 = float(values[i + 1])
            logger.info(f"Admissible s0={s0!r} for C={C!r} (first failure at s={s!r})")
            return s0
    logger.info(f"Whole grid admissible for C={C!r}; s0=e^-4")
    return float(values[0])


def ci_constant(C: float, I: float) -> float:
    """C_I = (4 ln 2 + 4 ln(10 sqrt I) + (2C + 16) pi) / 4."""
    return 0.25 * (4.0 * math.log(2.0) + 4.0 * math.log(10.0 * math.sqrt(I)) + (2.0 * C + 16.0) * math.pi)


def derive_constants(C: float, I: float, s0: float,
                     provenance: Optional[Dict[str, str]] = None) -> ProfileConstants:
    """
    Fill rho0, C' and C_I from (C, I, s0).

    Raises:
        DomainError: If C < 1, I < 1 or s0 outside (0, e^-4]
    """
    if not C >= 1.0:
        raise DomainError(f"C={C!r} must be at least 1")
    if not I >= 1.0:
        raise DomainError(f"I={I!r} must be at least 1")
    if not (0.0 < s0 <= E_INV4):
        raise DomainError(f"s0={s0!r} outside (0, e^-4]")
    lam = -math.log(s0)
    root = math.sqrt(lam)
    ratio = math.exp(root)  # g(s0)/s0
    rho0 = s0 / (2.0 * root)
    c_prime = C * ratio * (1.0 + math.log1p(ratio))
    c_i = ci_constant(C, I)
    return ProfileConstants(C=C, s0=s0, rho0=rho0, Cprime=c_prime, I=I, CI=c_i,
                            provenance=dict(provenance or {}))


def check_rho0_chain(constants: ProfileConstants, n: int = 200) -> Dict[str, float]:
    """
    Check rho0 <= min over s in [s0, 1/e] of g(s)/g'(s) - s on a log grid of n points.

    Returns:
        Dictionary with the sampled minimum, rho0 and the margin
    """
    if n < 2:
        raise DomainError("need at least two chain points")
    s = np.geomspace(constants.s0, E_INV, n)
    gap = g_values(s) / g_prime_values(s) - s
    minimum = float(np.min(gap))
    return {
        "minimum": minimum,
        "rho0": constants.rho0,
        "margin": minimum - constants.rho0,
        "argmin": float(s[int(np.argmin(gap))]),
    }


def check_f_inequality(grid: Sequence[float]) -> Dict[str, float]:
    """Worst margin of f(s) - 1 - ln((s + g(s))/s) over grid points in (0, e^-1]."""
    margins = []
    for s in grid:
        ratio = eval_g(s) / s
        margins.append(eval_f(s) - 1.0 - math.log1p(ratio))
    if not margins:
        raise DomainError("empty grid")
    worst = int(np.argmin(margins))
    return {"worst_margin": float(margins[worst]), "worst_s": float(grid[worst]), "count": len(margins)}


# Boundary of Omega_eps

def _graded_fractions(m: int, ratio: float) -> np.ndarray:
    """m+2 fractions in [0, 1] whose gaps grow geometrically away from 0."""
    widths = ratio ** np.arange(m + 1, dtype=float)
    edges = np.concatenate(([0.0], np.cumsum(widths)))
    return edges / edges[-1]


def omega_area(eps: float, quad: Optional[QuadratureSpec] = None) -> float:
    """|Omega_eps| = integral of g over (eps, 1/e)."""
    if not (0.0 < eps < E_INV):
        raise DomainError(f"eps={eps!r} outside (0, e^-1)")
    value, _ = quad_1d(lambda s: eval_g(s), eps, E_INV, quad or QuadratureSpec.from_config())
    return value


def omega_boundary_nodes(eps: float, n: int, circumscribe: bool = False,
                         ratio: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Counterclockwise polygon of n vertices tracing the boundary of Omega_eps.

    Pieces in order: bottom (eps,0) -> (1/e,0), right edge up to (1/e,1),
    the graph of g back to (eps, g(eps)), and the left edge down to (eps,0).
    Nodes are graded geometrically toward the corner (eps, g(eps)) and, on
    the bottom, toward (eps, 0).

    With circumscribe=True the graph vertices are intersections of tangent
    lines of g at consecutive sample abscissas, so every edge lies on or
    above the graph and the polygon contains Omega_eps.

    Returns:
        Tuple (nodes of shape (n, 2), boolean mask of nodes on the x1-axis)
    """
    if not (0.0 < eps <= E_INV4):
        raise DomainError(f"eps={eps!r} outside (0, e^-4]")
    if n < 8:
        raise DomainError(f"need at least 8 boundary nodes, got {n}")
    ratio = float(ratio or get_config("regions.grading_ratio", 1.15))

    interior = n - 4
    n_left = max(1, interior // 8)
    n_right = max(1, interior // 8)
    n_bottom = max(1, interior // 4)
    n_graph = interior - n_left - n_right - n_bottom
    width = E_INV - eps
    g_eps = eval_g(eps)

    fr = _graded_fractions(n_bottom, ratio)[:-1]
    bottom = [(eps + width * f, 0.0) for f in fr]

    right = [(E_INV, float(y)) for y in np.linspace(0.0, 1.0, n_right + 2)[:-1]]

    if circumscribe:
        s = eps + width * _graded_fractions(n_graph - 1, ratio)[::-1]
        graph = [(E_INV, 1.0)]
        for a, b in zip(s[:-1], s[1:]):
            a = min(float(a), E_INV)
            b = max(float(b), eps)
            ga, gb = eval_g(a), eval_g(b)
            da, db = eval_g_prime(a), eval_g_prime(b)
            x = (gb - ga + da * a - db * b) / (da - db)
            # lift by a relative 1e-12 so rounding never puts a vertex below the graph
            graph.append((x, max(ga + da * (x - a), eval_g(x) * (1.0 + 1e-12))))
    else:
        fr = _graded_fractions(n_graph, ratio)[::-1][:-1]
        graph = [(E_INV, 1.0)] + [(eps + width * f, eval_g(eps + width * f)) for f in fr[1:]]

    fr = _graded_fractions(n_left, ratio)[:-1]
    left = [(eps, g_eps * (1.0 - f)) for f in fr]
    left[0] = (eps, g_eps)

    nodes = np.array(bottom + right + graph + left, dtype=float)
    on_axis = nodes[:, 1] == 0.0
    return nodes, on_axis


def sample_omega_boundary(eps: float, n: int, circumscribe: bool = False) -> List[Point]:
    """Boundary of Omega_eps as n counterclockwise points; see omega_boundary_nodes."""
    nodes, _ = omega_boundary_nodes(eps, n, circumscribe=circumscribe)
    return [Point(x1=float(x), x2=float(y)) for x, y in nodes]
