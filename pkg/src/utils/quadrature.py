"""
Adaptive quadrature wrappers that turn QUADPACK diagnostics into QuadratureError.
"""

import warnings
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from core.interfaces import QuadratureError
from core.schemas import QuadratureSpec


def quad_1d(func: Callable[[float], float], a: float, b: float, spec: QuadratureSpec,
            points: Optional[Sequence[float]] = None,
            limit: Optional[int] = None) -> Tuple[float, float]:
    """
    Integrate func over [a, b] to the tolerances of spec.

    Args:
        func: Scalar integrand
        a: Lower limit
        b: Upper limit
        spec: Quadrature tolerances
        points: Interior breakpoints (only used for finite intervals)
        limit: Subinterval limit, defaults to spec.limit

    Returns:
        Tuple (value, error estimate)

    Raises:
        QuadratureError: If QUADPACK reports that the tolerance was not reached
    """
    if a == b:
        return 0.0, 0.0
    kwargs = {
        "epsabs": spec.abs_tol,
        "epsrel": spec.rel_tol,
        "limit": limit or spec.limit,
        "full_output": 1,
    }
    if points is not None and np.isfinite(a) and np.isfinite(b):
        lo, hi = min(a, b), max(a, b)
        inner = sorted({float(p) for p in points if lo < p < hi})
        if inner:
            kwargs["points"] = inner
            kwargs["limit"] = max(kwargs["limit"], 2 * len(inner) + 10)
    result = integrate.quad(func, a, b, **kwargs)
    value, error = float(result[0]), float(result[1])
    if len(result) > 3:
        raise QuadratureError(f"Adaptive quadrature on [{a!r}, {b!r}] did not converge: {result[3]}",
                              value, error)
    if not np.isfinite(value):
        raise QuadratureError(f"Adaptive quadrature on [{a!r}, {b!r}] produced a non-finite value",
                              value, error)
    return value, error


def dblquad_2d(func: Callable[[float, float], float], a: float, b: float,
               lower: Callable[[float], float], upper: Callable[[float], float],
               spec: QuadratureSpec) -> Tuple[float, float]:
    """
    Integrate func(y, x) over a <= x <= b, lower(x) <= y <= upper(x).

    Returns:
        Tuple (value, error estimate)
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            value, error = integrate.dblquad(func, a, b, lower, upper,
                                             epsabs=spec.abs_tol, epsrel=spec.rel_tol)
    except integrate.IntegrationWarning as e:
        raise QuadratureError(f"Double quadrature did not converge: {e}")
    if not np.isfinite(value):
        raise QuadratureError("Double quadrature produced a non-finite value", value, error)
    return float(value), float(error)


def quad_vector(func: Callable[[float], np.ndarray], a: float, b: float, spec: QuadratureSpec,
                points: Optional[Sequence[float]] = None) -> Tuple[np.ndarray, float]:
    """
    Integrate a vector-valued func over the finite interval [a, b].

    Returns:
        Tuple (value array, error estimate in the max norm)

    Raises:
        QuadratureError: If the subinterval limit is hit or the integrand is not finite
    """
    if a == b:
        return np.zeros_like(np.asarray(func(a), dtype=float)), 0.0
    inner = None
    if points is not None:
        lo, hi = min(a, b), max(a, b)
        inner = sorted({float(p) for p in points if lo < p < hi}) or None
    limit = max(spec.limit, 2 * len(inner or ()) + 10)
    value, error, info = integrate.quad_vec(func, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                            norm="max", limit=limit, points=inner, full_output=True)
    if info.status != 0:
        raise QuadratureError(f"Vector quadrature on [{a!r}, {b!r}] did not converge: {info.message}",
                              float(np.max(np.abs(value))), float(error))
    return np.asarray(value, dtype=float), float(error)
