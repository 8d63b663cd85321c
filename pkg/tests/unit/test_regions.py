#!/usr/bin/env python3
"""
Tests for the profile functions, region predicates, h(s) and the derived constants.
"""

import math
import sys
from pathlib import Path

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from core.interfaces import DomainError, NoAdmissibleS0Error
from core.schemas import E_INV, E_INV4, Point, ProfileConstants
from geometry.regions import (check_f_inequality, check_rho0_chain, ci_constant, compute_h, compute_h_log,
                              d_region_contains, derive_constants, eval_f, eval_g, eval_g_prime, find_s0,
                              log_g_ratio, omega_area, omega_boundary_nodes, omega_region_contains,
                              q_region_contains, sample_omega_boundary)
from velocity.polygon import points_in_polygon, signed_area

TWO_OVER_PI = 2.0 / math.pi


def h_polar_oracle(s: float) -> float:
    """h(s) by quadrature over the polar angle with the kinks located by root finding."""
    lam = -math.log(s)
    r_in = math.hypot(s, s * math.exp(math.sqrt(lam)))

    def r_graph(th):
        u = math.log(math.tan(th))
        return math.exp(-u * u) / math.cos(th)

    def r_max(th):
        if th <= 0.25 * math.pi:
            return E_INV
        return min(E_INV, r_graph(th))

    def integrand(th):
        r = r_max(th)
        return math.cos(th) * math.sin(th) * math.log(r / r_in) if r > r_in else 0.0

    lo, hi = 0.25 * math.pi + 1e-12, 0.5 * math.pi - 1e-9
    th_a = brentq(lambda th: r_graph(th) - E_INV, lo, hi, xtol=1e-15)
    th_b = brentq(lambda th: r_graph(th) - r_in, th_a, hi, xtol=1e-15)
    head = quad(integrand, 0.0, th_a, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    tail = quad(integrand, th_a, th_b, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    return 4.0 / (math.pi * lam) * (head + tail)


def test_g_examples():
    assert eval_g(E_INV4) == pytest.approx(math.exp(-2.0), rel=1e-14)
    assert eval_g(E_INV) == pytest.approx(1.0, rel=1e-14)
    mpmath.mp.dps = 40
    s = mpmath.mpf("1e-6")
    oracle = s * mpmath.exp(mpmath.sqrt(-mpmath.log(s)))
    assert eval_g(1e-6) == pytest.approx(float(oracle), rel=1e-13)
    print("✓ g matches closed values and the high-precision oracle")


def test_g_prime_examples():
    assert eval_g_prime(E_INV4) == pytest.approx(0.75 * math.exp(2.0), rel=1e-14)
    assert eval_g_prime(E_INV) == pytest.approx(0.5 * math.e, rel=1e-14)
    for s in (1e-12, 1e-6, 1e-3, 0.1, 0.3):
        h = 1e-8 * s
        fd = (eval_g(s + h) - eval_g(s - h)) / (2.0 * h)
        assert fd == pytest.approx(eval_g_prime(s), rel=1e-5)
        assert 1.0 < eval_g_prime(s) < eval_g(s) / s
    print("✓ g' matches the displayed formula and finite differences")


def test_profile_domains():
    for bad in (0.0, -1.0, 0.5, float("nan")):
        with pytest.raises(DomainError):
            eval_g(bad)
        with pytest.raises(DomainError):
            eval_g_prime(bad)
    with pytest.raises(DomainError):
        eval_f(1.0)
    assert eval_f(0.5) == pytest.approx(2.0 + math.sqrt(math.log(2.0)))
    print("✓ Profile functions reject arguments outside their domains")


def test_f_examples_and_inequality():
    assert eval_f(E_INV4) == pytest.approx(4.0)
    assert eval_f(E_INV) == pytest.approx(3.0)
    s = 1e-8
    assert eval_f(s) >= 1.0 + math.log((s + eval_g(s)) / s)
    report = check_f_inequality(list(np.geomspace(1e-300, E_INV, 300)))
    assert report["worst_margin"] >= 0.0
    assert report["count"] == 300
    print(f"✓ f inequality holds, worst margin {report['worst_margin']:.3e}")


def test_g_monotone_on_grid():
    s = np.geomspace(1e-200, E_INV, 500)
    g = np.array([eval_g(v) for v in s])
    assert np.all(g > s)
    assert np.all(np.diff(g) > 0.0)
    print("✓ g increasing and above the diagonal")


def test_log_g_ratio_limit():
    for k in range(4, 15):
        s = 10.0 ** -k
        assert abs(log_g_ratio(s) - 1.0) <= abs(math.log(s)) ** -0.5 + 1e-12
    print("✓ |ln g(s)|/|ln s| approaches 1 at the stated rate")


def test_omega_region_predicate():
    assert omega_region_contains(E_INV4, Point(x1=math.exp(-2.0), x2=math.exp(-3.0)))
    assert not omega_region_contains(E_INV4, Point(x1=math.exp(-5.0), x2=0.01))
    for s in (0.02, 0.1, 0.3):
        assert not omega_region_contains(E_INV4, Point(x1=s, x2=eval_g(s)))
    assert not omega_region_contains(E_INV4, Point(x1=0.1, x2=0.0))
    assert not omega_region_contains(E_INV4, Point(x1=E_INV, x2=0.5))
    print("✓ Omega_eps membership uses strict inequalities")


def test_q_region_predicate():
    assert q_region_contains(1.0, Point(x1=1.0, x2=1.0))
    assert not q_region_contains(1.0, Point(x1=0.6, x2=0.6))
    assert not q_region_contains(1.0, Point(x1=2.0, x2=0.0))
    with pytest.raises(DomainError):
        q_region_contains(0.0, Point(x1=1.0, x2=1.0))
    print("✓ Q(r) membership")


def test_d_region_predicate():
    assert d_region_contains(E_INV4, Point(x1=math.exp(-2.0), x2=math.exp(-3.0)))
    assert not d_region_contains(E_INV4, Point(x1=0.3, x2=0.3))
    assert not d_region_contains(E_INV4, Point(x1=0.01, x2=0.01))
    with pytest.raises(DomainError):
        d_region_contains(0.1, Point(x1=0.05, x2=0.05))
    print("✓ D_s membership")


def test_compute_h_against_polar_oracle():
    for s in (1e-6, 1e-10):
        value = compute_h(s)
        oracle = h_polar_oracle(s)
        assert value > 0.0
        assert value == pytest.approx(oracle, rel=1e-6)
    print("✓ h(s) agrees with the polar-angle oracle")


def test_h_limit_envelope_and_monotone():
    grid = [10.0 ** -k for k in range(4, 13)]
    deviations = []
    for s in grid:
        lam = -math.log(s)
        deviation = abs(compute_h(s) - TWO_OVER_PI)
        assert deviation <= TWO_OVER_PI * (math.sqrt(lam) + 2.0) / lam
        deviations.append(deviation)
    assert all(b <= a for a, b in zip(deviations, deviations[1:]))
    assert abs(compute_h(1e-150) - TWO_OVER_PI) <= 0.05
    print(f"✓ h(1e-12) = {TWO_OVER_PI - deviations[-1]:.4f}, deviation shrinking toward 2/pi")


def test_compute_h_log_below_double_range():
    lam = 1e6
    value = compute_h_log(lam)
    assert abs(value - TWO_OVER_PI) <= TWO_OVER_PI * (math.sqrt(lam) + 2.0) / lam
    assert compute_h_log(-math.log(1e-6)) == pytest.approx(compute_h(1e-6), rel=1e-14)
    with pytest.raises(DomainError):
        compute_h_log(3.0)
    with pytest.raises(DomainError):
        compute_h(0.1)
    print("✓ h evaluated through lam for s far below the double range")


def test_compute_h_tolerance_refinement():
    from core.schemas import QuadratureSpec
    spec = QuadratureSpec()
    coarse = compute_h(1e-6, spec)
    fine = compute_h(1e-6, spec.tightened(2.0))
    assert abs(coarse - fine) <= 1e-7
    print("✓ Tightening tolerances changes h below the requested accuracy")


def test_find_s0():
    with pytest.raises(NoAdmissibleS0Error, match="no admissible s0 on grid"):
        find_s0(1e6)
    s0 = find_s0(1.0, grid=[E_INV4, 1e-3, 1e-6, 1e-10, 1e-20, 1e-40])
    assert 0.0 < s0 <= E_INV4
    with pytest.raises(DomainError):
        find_s0(0.5)
    with pytest.raises(DomainError):
        find_s0(1.0, grid=[1e-6, 1e-3])
    print(f"✓ find_s0 certifies s0={s0:.3e} for C=1 and rejects huge C")


def test_derive_constants_examples():
    constants = derive_constants(1.0, 1.0, E_INV4)
    assert constants.rho0 == pytest.approx(E_INV4 / 4.0, rel=1e-14)
    assert constants.CI == pytest.approx(17.1329, abs=1e-3)
    e2 = math.exp(2.0)
    assert constants.Cprime == pytest.approx(e2 * (1.0 + math.log(1.0 + e2)), rel=1e-12)
    assert constants.Cprime == pytest.approx(23.10, abs=0.01)
    assert ci_constant(1.0, 1.0) == constants.CI
    with pytest.raises(DomainError):
        derive_constants(0.5, 1.0, E_INV4)
    with pytest.raises(DomainError):
        derive_constants(1.0, 0.5, E_INV4)
    print(f"✓ rho0, C'={constants.Cprime:.4f} and CI={constants.CI:.4f} from their formulas")


def test_profile_constants_validator():
    good = derive_constants(2.0, 4.0, 1e-5)
    data = good.model_dump()
    data["rho0"] = data["rho0"] * 1.01
    with pytest.raises(ValueError):
        ProfileConstants(**data)
    print("✓ ProfileConstants rejects values off their formulas")


def test_rho0_chain():
    for C, s0 in ((1.0, E_INV4), (4.0, 1e-30)):
        report = check_rho0_chain(derive_constants(C, 1.0, s0), n=200)
        assert report["margin"] >= 0.0
    print("✓ rho0 below min(g/g' - s) on [s0, 1/e]")


def test_sample_omega_boundary_vertices():
    points = sample_omega_boundary(E_INV4, 8)
    assert len(points) == 8
    assert not any(omega_region_contains(E_INV4, p) for p in points)
    nodes, on_axis = omega_boundary_nodes(E_INV4, 64)
    assert signed_area(nodes) > 0.0
    assert np.all(nodes[on_axis, 1] == 0.0)
    assert nodes[0].tolist() == [E_INV4, 0.0]
    with pytest.raises(DomainError):
        omega_boundary_nodes(E_INV4, 7)
    with pytest.raises(DomainError):
        omega_boundary_nodes(0.1, 16)
    print("✓ Boundary polygon is counterclockwise with vertices on the boundary")


def test_boundary_area_convergence():
    exact = omega_area(E_INV4)
    nodes, _ = omega_boundary_nodes(E_INV4, 256)
    area = signed_area(nodes)
    error = abs(area - exact) / exact
    assert error <= 0.01
    # inscribed chords of a concave graph
    assert area <= exact
    print(f"✓ Boundary area error {error:.2e} at 256 nodes")


def test_circumscribed_boundary_contains_region():
    eps = 1e-3
    nodes, _ = omega_boundary_nodes(eps, 128, circumscribe=True)
    rng = np.random.default_rng(3)
    x1 = rng.uniform(eps, E_INV, 4000)
    x2 = rng.uniform(0.0, 1.0, 4000)
    inside = np.array([omega_region_contains(eps, Point(x1=a, x2=b)) for a, b in zip(x1, x2)])
    pts = np.column_stack([x1[inside], x2[inside]])
    assert np.all(points_in_polygon(pts, nodes))
    assert signed_area(nodes) >= omega_area(eps)
    for x, y in nodes:
        assert not omega_region_contains(eps, Point(x1=x, x2=y))
    print("✓ Circumscribed polygon contains Omega_eps")


def main():
    """Run all tests."""
    print("=== Regions Tests ===\n")
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
