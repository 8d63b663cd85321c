#!/usr/bin/env python3
"""
Tests for the shrinking barrier region and its rate equations.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from core.interfaces import DomainError
from core.schemas import E_INV, E_INV4
from geometry.regions import derive_constants, h_times_log
from simulation.barrier import (BarrierState, admissible_lambda0, alpha_log_rate_floor, barrier_eps_trajectory,
                                barrier_rates, chebyshev_fractions, check_boundary_velocity_signs,
                                containment_mask, eps_bracket, wall_margin)
from velocity import Patch, VorticityField
from velocity.contour import field_velocity

CONSTANTS = derive_constants(1.0, 1.0, E_INV4)


def square_field() -> VorticityField:
    nodes = np.array([[1.0, 1.0], [2.0, 1.0], [2.0, 2.0], [1.0, 2.0]])
    return VorticityField.build([Patch(nodes, 1.0)])


def test_initial_and_collapse():
    barrier = BarrierState.initial(E_INV4)
    assert barrier.log_eps == pytest.approx(-4.0, abs=1e-15)
    assert barrier.alpha == 1.0 and not barrier.collapsed
    moved = barrier.advanced(-0.5, -3.0, 0.1)
    assert moved.log_alpha == -0.5 and moved.t == 0.1 and not moved.collapsed
    gone = moved.advanced(-0.7, -0.5, 0.2)
    assert gone.collapsed and gone.log_eps == -1.0
    later = gone.advanced(-2.0, -10.0, 0.3)
    assert later.collapsed and later.t == 0.3 and later.log_alpha == -0.7
    with pytest.raises(DomainError):
        BarrierState.initial(0.5)
    print("✓ Barrier state collapses once eps reaches 1/e and stays frozen")


def test_containment_mask():
    barrier = BarrierState(log_alpha=math.log(0.5), log_eps=-4.0)
    pts = np.array([[0.05, 0.025], [0.005, 0.001], [0.05, 0.4], [0.3, 0.01]])
    assert containment_mask(pts, barrier).tolist() == [True, False, False, False]
    collapsed = BarrierState(log_alpha=0.0, log_eps=-1.0, collapsed=True)
    assert not np.any(containment_mask(pts, collapsed))
    print("✓ Containment mask scales Omega_eps by alpha")


def test_chebyshev_fractions():
    assert chebyshev_fractions(3) == pytest.approx([0.0, 0.5, 1.0], abs=1e-15)
    fr = chebyshev_fractions(33)
    assert fr[0] == 0.0 and fr[-1] == 1.0 and np.all(np.diff(fr) > 0.0)
    with pytest.raises(DomainError):
        chebyshev_fractions(1)
    print("✓ Chebyshev-Lobatto fractions include both ends")


def test_eps_bracket_formula():
    lam = 50.0
    expected = (h_times_log(lam) - math.sqrt(lam) - 8.0
                - 3.0 * CONSTANTS.Cprime * CONSTANTS.s0 / CONSTANTS.rho0)
    assert eps_bracket(lam, CONSTANTS) == pytest.approx(expected, rel=1e-12)
    assert eps_bracket(4.0, CONSTANTS) < 0.0
    with pytest.raises(DomainError):
        eps_bracket(0.0, CONSTANTS)
    print("✓ eps bracket matches h|ln eps| - C|ln eps|^(1/2) - 8C - 3C's0/rho0")


def test_barrier_rates():
    field = square_field()
    rates = barrier_rates(field, 0.0, -4.0, CONSTANTS)
    # hyperbolic flow pulls the right wall towards the x2-axis
    assert rates.inf_u1 < 0.0
    assert rates.d_log_alpha < -CONSTANTS.barrier_rate
    assert rates.d_log_eps == pytest.approx(-eps_bracket(4.0, CONSTANTS), rel=1e-12)
    assert rates.d_log_eps > 0.0

    frozen = barrier_rates(field, 0.0, -0.5, CONSTANTS)
    assert frozen.d_log_alpha == 0.0 and frozen.d_log_eps == 0.0
    assert math.isnan(frozen.inf_u1)
    print(f"✓ Barrier rates: d ln alpha/dt = {rates.d_log_alpha:.4f}, d ln eps/dt = {rates.d_log_eps:.4f}")


def test_wall_margin():
    field = square_field()
    rates = barrier_rates(field, 0.0, -4.0, CONSTANTS)
    s = np.linspace(0.0, 1.0, 129)
    dense_min = float(np.min(field_velocity(field, np.column_stack([np.full_like(s, E_INV), s]))[:, 0]))
    margin = wall_margin(field, 0.0, rates.d_log_alpha, n_samples=129)
    assert margin == pytest.approx(dense_min - E_INV * rates.d_log_alpha, rel=1e-12)
    assert margin > 0.0

    # a wall moving outward faster than the fluid is crossed
    assert dense_min < 0.0
    assert wall_margin(field, 0.0, 1.0, n_samples=129) == pytest.approx(dense_min - E_INV, rel=1e-12)
    assert wall_margin(field, 0.0, 1.0, n_samples=129) < 0.0

    # shrinking alpha samples the scaled wall
    small = wall_margin(field, -2.0, 0.0, n_samples=17)
    s = math.exp(-2.0) * np.linspace(0.0, 1.0, 17)
    pts = np.column_stack([np.full_like(s, math.exp(-2.0) * E_INV), s])
    assert small == pytest.approx(float(np.min(field_velocity(field, pts)[:, 0])), rel=1e-12)
    with pytest.raises(DomainError):
        wall_margin(field, 0.0, 0.0, n_samples=1)
    print(f"✓ Wall margin {margin:.4f} against the realized wall speed; an outrunning wall fails")


def test_admissible_lambda0():
    lam0 = admissible_lambda0(CONSTANTS)
    assert lam0 > 4.0
    assert eps_bracket(lam0, CONSTANTS) > 0.0
    assert eps_bracket(0.999 * lam0, CONSTANTS) < 0.0
    print(f"✓ Smallest admissible |ln eps(0)| = {lam0:.6f}")


def test_eps_trajectory_rate():
    lam0 = 1.5 * admissible_lambda0(CONSTANTS)
    result = barrier_eps_trajectory(CONSTANTS, lam0=lam0, t_end=30.0, n_points=121)
    frame = result["frame"]
    assert result["lam0"] == lam0
    assert result["monotone"]
    assert list(frame.columns) == ["t", "lam", "rate"]
    assert math.isnan(frame["rate"].iloc[0])
    assert result["trailing_slope"] == pytest.approx(2.0 / math.pi, rel=0.05)
    with pytest.raises(DomainError):
        barrier_eps_trajectory(CONSTANTS, lam0=lam0, t_end=0.0)
    print(f"✓ ln|ln eps| grows at {result['trailing_slope']:.5f} (2/pi = {2.0 / math.pi:.5f})")


def test_alpha_log_rate_floor():
    expected = -CONSTANTS.barrier_rate - (2.0 + CONSTANTS.CI) / math.pi
    assert alpha_log_rate_floor(0.0, CONSTANTS, 1.0) == pytest.approx(expected, rel=1e-14)
    assert alpha_log_rate_floor(-5.0, CONSTANTS, 1.0) < alpha_log_rate_floor(0.0, CONSTANTS, 1.0)
    rates = barrier_rates(square_field(), 0.0, -4.0, CONSTANTS)
    assert rates.d_log_alpha >= alpha_log_rate_floor(0.0, CONSTANTS, 1.0)
    print("✓ Alpha log rate stays above its approach-velocity floor")


def test_boundary_velocity_signs():
    field = square_field()
    at_s0 = check_boundary_velocity_signs(field, E_INV4, 1.0, CONSTANTS, n=16)
    assert at_s0["near_margin"] is None
    assert isinstance(at_s0["far_margin"], float)
    assert at_s0["samples"] == 16
    small = check_boundary_velocity_signs(field, 1e-6, 1.0, CONSTANTS, n=16)
    assert isinstance(small["near_margin"], float)
    with pytest.raises(DomainError):
        check_boundary_velocity_signs(field, 0.5, 1.0, CONSTANTS)
    print("✓ Boundary sign check reports margins per range")


def main():
    """Run all tests."""
    print("=== Barrier Tests ===\n")
    tests = [obj for name, obj in sorted(globals().items()) if name.startswith("test_") and callable(obj)]
    failed = 0
    for test in tests:
        try:
            test()
        except Exception as e:
            failed += 1
            print(f"✗ {test.__name__} FAILED: {e}")
    print(f"\nPassed: {len(tests) - failed}, Failed: {failed}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
