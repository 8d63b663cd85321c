"""
The shrinking barrier region alpha(t) * Omega_eps(t).

alpha and eps are carried as logarithms so that the fast decay of alpha
and the double-exponential decay of eps stay representable:

    d ln(alpha)/dt = -3 (C' s0 / rho0 + C) + inf_{s in [0, alpha]} u1(alpha/e, s) / (alpha/e)
    d ln(eps)/dt   = -[h(eps) |ln eps| - C |ln eps|^(1/2) - 8C - 3 C' s0 / rho0]

The second equation is the equality form of the strict inequality that
keeps the patch boundary out of the barrier region. Once eps reaches 1/e
the region is empty and the barrier stops evolving.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Optional

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from core.interfaces import BracketError, DomainError
from core.schemas import E_INV, ProfileConstants, QuadratureSpec
from geometry.regions import ci_constant, g_values, h_times_log, omega_region_mask
from utils.config import get_config
from velocity.contour import field_velocity
from velocity.field import VorticityField

logger = logging.getLogger(__name__)

LOG_E_INV = -1.0


@dataclass(frozen=True)
class BarrierState:
    """alpha(t) and eps(t) in log form; collapsed once eps >= 1/e."""

    log_alpha: float = 0.0
    log_eps: float = -4.0
    t: float = 0.0
    collapsed: bool = False

    @classmethod
    def initial(cls, eps0: float) -> "BarrierState":
        if not (0.0 < eps0 < E_INV):
            raise DomainError(f"eps0={eps0!r} outside (0, 1/e)")
        return cls(log_alpha=0.0, log_eps=math.log(eps0), t=0.0)

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def eps(self) -> float:
        return math.exp(self.log_eps)

    @property
    def log_eps_alpha(self) -> float:
        return self.log_eps + self.log_alpha

    def advanced(self, log_alpha: float, log_eps: float, t: float) -> "BarrierState":
        if self.collapsed:
            return replace(self, t=t)
        if log_eps >= LOG_E_INV:
            logger.info(f"Barrier region empty at t={t:.6g} (eps reached 1/e)")
            return BarrierState(log_alpha=log_alpha, log_eps=LOG_E_INV, t=t, collapsed=True)
        return BarrierState(log_alpha=log_alpha, log_eps=log_eps, t=t)


@dataclass(frozen=True)
class BarrierRates:
    d_log_alpha: float
    d_log_eps: float
    inf_u1: float
    eps_bracket: float


def chebyshev_fractions(n: int) -> np.ndarray:
    """n Chebyshev-Lobatto points on [0, 1], endpoints included."""
    if n < 2:
        raise DomainError("need at least two samples")
    k = np.arange(n, dtype=float)
    return 0.5 * (1.0 - np.cos(np.pi * k / (n - 1)))


def eps_bracket(lam: float, constants: ProfileConstants, quad: Optional[QuadratureSpec] = None) -> float:
    """h(eps)|ln eps| - C |ln eps|^(1/2) - 8C - 3 C' s0 / rho0 at lam = |ln eps|."""
    if not lam > 0.0:
        raise DomainError(f"lam={lam!r} must be positive")
    C = constants.C
    return (h_times_log(lam, quad) - C * math.sqrt(lam) - 8.0 * C
            - 3.0 * constants.Cprime * constants.s0 / constants.rho0)


def wall_inf_u1(field: VorticityField, log_alpha: float, n_samples: int) -> float:
    """min of u1 over the right wall {(alpha/e, s) : s in [0, alpha]} at Chebyshev samples."""
    alpha = math.exp(log_alpha)
    if alpha == 0.0:
        return 0.0
    s = alpha * chebyshev_fractions(n_samples)
    pts = np.column_stack([np.full_like(s, alpha * E_INV), s])
    return float(np.min(field_velocity(field, pts)[:, 0]))


def barrier_rates(field: VorticityField, log_alpha: float, log_eps: float,
                  constants: ProfileConstants, n_samples: Optional[int] = None,
                  quad: Optional[QuadratureSpec] = None) -> BarrierRates:
    """
    Right-hand sides of the log-alpha and log-eps equations.

    A collapsed barrier (log_eps >= -1) has zero rates.
    """
    if log_eps >= LOG_E_INV:
        return BarrierRates(0.0, 0.0, math.nan, math.nan)
    n_samples = int(n_samples or get_config("simulation.inf_samples", 33))
    x1_floor = float(get_config("simulation.inf_x1_floor", 1e-6))

    inf_u1 = wall_inf_u1(field, log_alpha, n_samples)
    wall_x1 = max(math.exp(log_alpha) * E_INV, x1_floor)
    d_log_alpha = -constants.barrier_rate + inf_u1 / wall_x1

    bracket = eps_bracket(-log_eps, constants, quad)
    return BarrierRates(d_log_alpha=d_log_alpha, d_log_eps=-bracket, inf_u1=inf_u1,
                        eps_bracket=bracket)


def wall_margin(field: VorticityField, log_alpha: float, d_log_alpha: float,
                n_samples: Optional[int] = None) -> float:
    """
    min u1 on the right wall {(alpha/e, s) : s in [0, alpha]} minus the wall's normal speed alpha'/e.

    The wall is sampled uniformly with simulation.wall_check_samples points,
    independently of the Chebyshev samples that drive alpha. A negative
    margin means fluid crosses the wall into the barrier region.
    """
    n = int(n_samples or get_config("simulation.wall_check_samples", 129))
    if n < 2:
        raise DomainError("need at least two wall samples")
    alpha = math.exp(log_alpha)
    s = np.linspace(0.0, alpha, n)
    pts = np.column_stack([np.full_like(s, alpha * E_INV), s])
    min_u1 = float(np.min(field_velocity(field, pts)[:, 0]))
    return min_u1 - alpha * E_INV * d_log_alpha


def containment_mask(points: np.ndarray, barrier: BarrierState) -> np.ndarray:
    """True for points inside alpha * Omega_eps."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    alpha = barrier.alpha
    if barrier.collapsed or alpha == 0.0:
        return np.zeros(len(pts), dtype=bool)
    return omega_region_mask(barrier.eps, pts[:, 0] / alpha, pts[:, 1] / alpha)


def admissible_lambda0(constants: ProfileConstants, quad: Optional[QuadratureSpec] = None) -> float:
    """
    Smallest lam >= |ln s0| at which the eps bracket is positive.

    Raises:
        BracketError: If no such lam is found below 1e300
    """
    lam_s0 = -math.log(constants.s0)
    f = lambda lam: eps_bracket(lam, constants, quad)
    if f(lam_s0) > 0.0:
        return lam_s0
    hi = 2.0 * lam_s0
    while f(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise BracketError("eps bracket never becomes positive")
    root = brentq(f, lam_s0, hi, xtol=1e-12 * hi, rtol=1e-14)
    lam0 = root * (1.0 + 1e-9)
    while f(lam0) <= 0.0:
        lam0 *= 1.0 + 1e-6
    return lam0


def barrier_eps_trajectory(constants: ProfileConstants, lam0: Optional[float] = None,
                           t_end: float = 60.0, n_points: int = 241,
                           quad: Optional[QuadratureSpec] = None) -> Dict[str, object]:
    """
    Integrate the equality form of the eps equation in lam = -ln eps.

    Returns:
        Dictionary with the trajectory DataFrame (t, lam, rate = ln(lam)/t),
        lam0, the trailing slope of ln(lam) against t and whether lam
        increased monotonically
    """
    if not t_end > 0.0:
        raise DomainError(f"t_end={t_end!r} must be positive")
    quad = quad or QuadratureSpec.from_config()
    lam0 = float(lam0 if lam0 is not None else admissible_lambda0(constants, quad))

    def rhs(_t, y):
        return [eps_bracket(y[0], constants, quad)]

    t_eval = np.linspace(0.0, t_end, n_points)
    sol = solve_ivp(rhs, (0.0, t_end), [lam0], method="RK45", t_eval=t_eval, rtol=1e-9, atol=1e-12)
    if not sol.success:
        raise DomainError(f"Failed to integrate the eps equation: {sol.message}")
    lam = sol.y[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.where(sol.t > 0.0, np.log(lam) / sol.t, np.nan)
    frame = pd.DataFrame({"t": sol.t, "lam": lam, "rate": rate})

    count = max(2, int(math.ceil(0.2 * len(frame))))
    tail = frame.iloc[-count:]
    slope, _ = np.polyfit(tail["t"].to_numpy(), np.log(tail["lam"].to_numpy()), 1)
    return {
        "frame": frame,
        "lam0": lam0,
        "trailing_slope": float(slope),
        "monotone": bool(np.all(np.diff(lam) > 0.0)),
    }


def check_boundary_velocity_signs(field: VorticityField, eps: float, alpha: float,
                                  constants: ProfileConstants, n: int = 64) -> Dict[str, object]:
    """
    Sign conditions of the velocity on the scaled graph {(s alpha, g(s) alpha)}.

    For s in [eps, s0]: (-1)^j u_j >= 0; for s in [s0, 1/e]:
    (-1)^j u_j >= -C' s alpha (j = 1, 2).

    Returns:
        Dictionary with the worst margin of each range (None when the range
        is empty) and the number of samples per range
    """
    if not (0.0 < eps < E_INV) or not alpha > 0.0:
        raise DomainError(f"invalid barrier eps={eps!r}, alpha={alpha!r}")

    def margins(s: np.ndarray) -> np.ndarray:
        pts = np.column_stack([s * alpha, g_values(s) * alpha])
        u = field_velocity(field, pts)
        return np.minimum(-u[:, 0], u[:, 1])

    result: Dict[str, object] = {"near_margin": None, "far_margin": None, "samples": n}
    if eps < constants.s0:
        s = np.geomspace(eps, constants.s0, n)
        result["near_margin"] = float(np.min(margins(s)))
    s = np.geomspace(max(eps, constants.s0), E_INV, n)
    result["far_margin"] = float(np.min(margins(s) + constants.Cprime * s * alpha))
    return result


def alpha_log_rate_floor(log_alpha: float, constants: ProfileConstants, I: float) -> float:
    """
    Lower bound of d ln(alpha)/dt from the approach-velocity estimate.

    |u1(alpha/e, s)| <= (2 |ln(alpha/e)| + C_I) alpha / (pi e), so the log
    rate is at least -3(C' s0/rho0 + C) - (2 |ln alpha - 1| + C_I) / pi.
    """
    CI = ci_constant(constants.C, max(1.0, I))
    return -constants.barrier_rate - (2.0 * abs(log_alpha - 1.0) + CI) / math.pi
