"""
Double-exponential upper bound for the vorticity gradient.

With G(t) = |grad w(t)|_inf the approach-velocity estimate gives

    dG/dt <= (2/pi) (ln max(G, 1) + CI) G

whose solution is bounded by exp(|ln G0| exp(2t/pi + CI (1 - exp(-2t/pi)) / |ln G0|)).
A vorticity of size gamma < 1 runs on the time scale gamma t.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.interfaces import DomainError
from core.schemas import GrowthBoundParams
from utils.config import get_config

logger = logging.getLogger(__name__)

TWO_OVER_PI = 2.0 / math.pi


def _log_grad0(params: GrowthBoundParams) -> float:
    L = abs(math.log(params.grad0))
    if L == 0.0:
        raise DomainError("grad0 = 1 makes the bound degenerate; use 1 + 1e-6 instead")
    return L


def log_log_gradient_upper_bound(t: float, params: GrowthBoundParams) -> float:
    """ln ln of the closed-form bound, finite for every t >= 0."""
    if not (t >= 0.0 and math.isfinite(t)):
        raise DomainError(f"t={t!r} must be finite and nonnegative")
    L = _log_grad0(params)
    tau = TWO_OVER_PI * params.gamma * t
    return math.log(L) + tau + params.CI * (-math.expm1(-tau)) / L


def gradient_upper_bound(t: float, params: GrowthBoundParams) -> float:
    """
    The closed-form bound on |grad w(t)|_inf.

    Args:
        t: Time, nonnegative
        params: CI, initial gradient and vorticity size

    Returns:
        The bound, or inf once it exceeds the double range

    Raises:
        DomainError: If t < 0 or grad0 == 1
    """
    loglog = log_log_gradient_upper_bound(t, params)
    try:
        return math.exp(math.exp(loglog))
    except OverflowError:
        return math.inf


def bound_curve(times: Sequence[float], params: GrowthBoundParams) -> pd.DataFrame:
    """Bound, ln ln bound and its rate ln ln bound / t on a time grid."""
    rows = []
    for t in times:
        loglog = log_log_gradient_upper_bound(float(t), params)
        rows.append({
            "t": float(t),
            "bound": gradient_upper_bound(float(t), params),
            "log_log_bound": loglog,
            "rate": loglog / t if t > 0.0 else math.nan,
        })
    return pd.DataFrame(rows, columns=["t", "bound", "log_log_bound", "rate"])


def integrated_log_growth(y0: float, dt: float, CI: float) -> float:
    """
    Largest ln G reachable after dt from ln G = y0 under the differential inequality.

    Below G = 1 the logarithm grows linearly at 2 CI / pi; above it y + CI
    grows by the factor exp(2 dt / pi).
    """
    if y0 < 0.0:
        if CI <= 0.0:
            return y0
        to_one = -y0 / (TWO_OVER_PI * CI)
        if dt <= to_one:
            return y0 + TWO_OVER_PI * CI * dt
        y0, dt = 0.0, dt - to_one
    return (y0 + CI) * math.exp(TWO_OVER_PI * dt) - CI


@dataclass
class GrowthReport:
    """Outcome of the discrete growth-inequality check."""

    passed: bool
    violations: List[Dict[str, float]]
    worst_margin: float
    n_intervals: int
    slack: float
    CI: float
    rows: List[Dict[str, float]] = field(default_factory=list, repr=False)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["t0", "t1", "proxy0", "proxy1", "log_growth",
                                                "allowed", "margin", "ok"])


def _validate_history(history: Sequence[Tuple[float, float]]) -> np.ndarray:
    arr = np.asarray(history, dtype=float).reshape(-1, 2)
    if len(arr) and not np.all(np.isfinite(arr)):
        raise DomainError("history contains non-finite values")
    if len(arr) and np.any(arr[:, 1] <= 0.0):
        raise DomainError("history proxies must be positive")
    if len(arr) > 1 and np.any(np.diff(arr[:, 0]) < 0.0):
        raise DomainError("history must be sorted by time")
    return arr


def check_growth_inequality(history: Sequence[Tuple[float, float]], CI: float,
                            slack: Optional[float] = None) -> GrowthReport:
    """
    Check each consecutive pair of (t, proxy) samples against the integrated inequality.

    An interval passes when its log growth ln(G1/G0) is at most (1 + slack)
    times the largest log growth the inequality allows over the same time.
    Intervals of zero length are skipped.
    """
    slack = float(get_config("estimates.growth_slack", 0.1) if slack is None else slack)
    arr = _validate_history(history)
    rows, violations = [], []
    worst = math.inf
    for (t0, g0), (t1, g1) in zip(arr[:-1], arr[1:]):
        dt = float(t1 - t0)
        if dt <= 0.0:
            continue
        y0, y1 = math.log(g0), math.log(g1)
        allowed = integrated_log_growth(y0, dt, CI) - y0
        growth = y1 - y0
        margin = (1.0 + slack) * allowed - growth
        ok = margin >= 0.0
        row = {"t0": float(t0), "t1": float(t1), "proxy0": float(g0), "proxy1": float(g1),
               "log_growth": growth, "allowed": allowed, "margin": margin, "ok": ok}
        rows.append(row)
        worst = min(worst, margin)
        if not ok:
            violations.append(row)

    if violations:
        logger.warning(f"Growth inequality violated on {len(violations)} of {len(rows)} interval(s), "
                       f"worst margin {worst:.6g}")
    return GrowthReport(passed=not violations, violations=violations,
                        worst_margin=worst if rows else 0.0, n_intervals=len(rows),
                        slack=slack, CI=CI, rows=rows)


def check_upper_bound(history: Sequence[Tuple[float, float]], params: GrowthBoundParams,
                      slack: Optional[float] = None) -> Dict[str, float]:
    """
    Compare a (t, proxy) history with the closed-form bound.

    The comparison is done in logs: ln proxy <= ln bound + ln(1 + slack).

    Returns:
        Dictionary with passed, worst_margin (in ln units) and worst_t
    """
    slack = float(get_config("estimates.growth_slack", 0.1) if slack is None else slack)
    arr = _validate_history(history)
    t0 = float(arr[0, 0]) if len(arr) else 0.0
    worst, worst_t = math.inf, math.nan
    for t, g in arr:
        log_bound = math.exp(log_log_gradient_upper_bound(float(t) - t0, params))
        margin = log_bound + math.log1p(slack) - math.log(g)
        if margin < worst:
            worst, worst_t = margin, float(t)
    if not len(arr):
        worst = 0.0
    return {"passed": worst >= 0.0, "worst_margin": worst, "worst_t": worst_t}


def synthetic_history(kind: str, t_max: float, n: int) -> List[Tuple[float, float]]:
    """
    Synthetic (t, proxy) series: exp(exp(2t/pi)) on the CI = 0 envelope or exp(exp(3t)).

    Times run over [0, t_max] uniformly.
    """
    rates = {"exp_exp_2t_over_pi": TWO_OVER_PI, "exp_exp_3t": 3.0}
    if kind not in rates:
        raise DomainError(f"unknown synthetic history '{kind}'")
    rate = rates[kind]
    times = np.linspace(0.0, t_max, n)
    try:
        return [(float(t), math.exp(math.exp(rate * t))) for t in times]
    except OverflowError:
        raise DomainError(f"synthetic history '{kind}' overflows before t_max={t_max!r}")
