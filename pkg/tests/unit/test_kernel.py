#!/usr/bin/env python3
"""
Tests for polygon geometry, vortex patches and the velocity evaluators.
"""

import math
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import dblquad

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from core.interfaces import ConfigurationError, DomainError
from core.schemas import Point
from velocity import Patch, SymmetryFlags, VorticityField, velocity_batch, velocity_contour
from velocity.battery import (format_patch_text, load_battery, parse_patch_text, read_patch_file,
                              standard_battery, write_patch_file)
from velocity.contour import ContourVelocity
from velocity.kernel import (domain_difference_integral, extract_b, far_field_decay, fit_grid,
                             fit_kernel_constant, main_term, velocity_direct)
from velocity.polygon import (as_vertices, distance_to_polygon, is_simple, points_in_polygon,
                              segments_intersect, signed_area)

SRC_ROOT = Path(__file__).resolve().parents[2]
UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def square_field(nodes_per_side: int = 1) -> VorticityField:
    """Unit-strength (1,2)x(1,2) patch with both odd images."""
    t = np.linspace(0.0, 1.0, nodes_per_side + 1)[:-1]
    sides = [
        np.column_stack([1.0 + t, np.full_like(t, 1.0)]),
        np.column_stack([np.full_like(t, 2.0), 1.0 + t]),
        np.column_stack([2.0 - t, np.full_like(t, 2.0)]),
        np.column_stack([np.full_like(t, 1.0), 2.0 - t]),
    ]
    return VorticityField.build([Patch(np.vstack(sides), 1.0)])


def riemann_velocity(x1: float, x2: float, cells: int = 1000):
    """Midpoint sum of the half-plane Biot-Savart integrals over (1,2)^2."""
    c = 1.0 + (np.arange(cells) + 0.5) / cells
    y1, y2 = np.meshgrid(c, c, indexing="ij")
    dA = 1.0 / cells ** 2

    def d2(a1, a2):
        return (x1 - a1) ** 2 + (x2 - a2) ** 2

    k1 = (y1 * (x2 - y2) / (d2(y1, y2) * d2(-y1, y2))
          - y1 * (x2 + y2) / (d2(y1, -y2) * d2(-y1, -y2)))
    k2 = (y2 * (x1 - y1) / (d2(y1, y2) * d2(y1, -y2))
          - y2 * (x1 + y1) / (d2(-y1, y2) * d2(-y1, -y2)))
    u1 = 2.0 * x1 / math.pi * float(np.sum(k1)) * dA
    u2 = -2.0 * x2 / math.pi * float(np.sum(k2)) * dA
    return u1, u2


def test_polygon_basics():
    assert signed_area(UNIT_SQUARE) == pytest.approx(1.0)
    assert signed_area(UNIT_SQUARE[::-1]) == pytest.approx(-1.0)
    inside = points_in_polygon(np.array([[0.5, 0.5], [1.5, 0.5], [-0.1, 0.2]]), UNIT_SQUARE)
    assert inside.tolist() == [True, False, False]
    bowtie = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    assert is_simple(UNIT_SQUARE)
    assert not is_simple(bowtie)
    d = distance_to_polygon(np.array([[0.5, 0.5], [2.0, 0.5]]), UNIT_SQUARE)
    assert d.tolist() == pytest.approx([0.5, 1.0])
    touching = segments_intersect(np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]]),
                                  np.array([[1.0, 0.0]]), np.array([[1.0, 1.0]]))
    assert touching.tolist() == [True]
    print("✓ Polygon area, containment, simplicity and distance")


def test_patch_validation():
    with pytest.raises(DomainError, match="counterclockwise"):
        Patch(UNIT_SQUARE[::-1] + 1.0)
    with pytest.raises(DomainError, match="strength"):
        Patch(UNIT_SQUARE + 1.0, strength=1.5)
    with pytest.raises(DomainError, match="first quadrant"):
        Patch(UNIT_SQUARE - 0.5)
    with pytest.raises(DomainError, match="3 distinct"):
        Patch(np.array([[1.0, 1.0], [2.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(DomainError, match="not simple"):
        Patch(np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0], [1.0, -1.0]]),
              symmetry=SymmetryFlags(False, False))
    with pytest.raises(DomainError, match="vertex array"):
        Patch(np.array([1.0, 2.0, 3.0]))
    with pytest.raises(DomainError, match="vertex array"):
        as_vertices(np.ones((4, 3)))
    patch = Patch(UNIT_SQUARE - 0.5, symmetry=SymmetryFlags(odd_x1=True, odd_x2=False))
    assert patch.l1_mass == pytest.approx(2.0)
    print("✓ Patch invariants enforced at construction")


def test_field_mass_and_overlap():
    field = square_field()
    assert field.total_l1 == pytest.approx(4.0)
    assert field.all_odd
    a = Patch(UNIT_SQUARE + 1.0)
    b = Patch(UNIT_SQUARE + 1.5)
    with pytest.raises(DomainError, match="overlap"):
        VorticityField.build([a, b])
    with pytest.raises(DomainError, match="cached L1"):
        VorticityField((a,), 3.0)
    assert VorticityField.empty().total_l1 == 0.0
    print("✓ L1 mass includes images, overlapping patches rejected")


def test_zero_strength_field():
    field = VorticityField.build([Patch(UNIT_SQUARE + 1.0, strength=0.0)])
    u = velocity_contour(field, Point(x1=0.3, x2=0.4))
    assert (u.x1, u.x2) == (0.0, 0.0)
    b1, b2 = extract_b(field, Point(x1=0.3, x2=0.4))
    assert b1 == 0.0 and b2 == 0.0
    print("✓ Zero-strength field has zero velocity and remainders")


def test_axis_conditions():
    for name, field in standard_battery().items():
        for t in np.linspace(0.05, 1.5, 11):
            on_x2_axis = velocity_contour(field, Point(x1=0.0, x2=float(t)))
            on_x1_axis = velocity_contour(field, Point(x1=float(t), x2=0.0))
            assert abs(on_x2_axis.x1) <= 1e-12, name
            assert abs(on_x1_axis.x2) <= 1e-12, name
    print("✓ u1 vanishes on x1 = 0 and u2 on x2 = 0 for every battery field")


def test_contour_matches_riemann_oracle():
    field = square_field(128)
    assert field.node_count == 512
    u = velocity_contour(field, Point(x1=0.1, x2=0.1))
    o1, o2 = riemann_velocity(0.1, 0.1)
    assert u.x1 == pytest.approx(o1, rel=1e-4)
    assert u.x2 == pytest.approx(o2, rel=1e-4)
    # hyperbolic flow: inward along x1, outward along x2
    assert u.x1 < 0.0 < u.x2
    print(f"✓ Contour velocity ({u.x1:.6e}, {u.x2:.6e}) matches the Riemann sum")


def test_direct_matches_contour():
    field = square_field()
    dense = square_field(128)
    for x in (Point(x1=0.1, x2=0.1), Point(x1=0.5, x2=1.3), Point(x1=2.5, x2=0.4)):
        direct = velocity_direct(field, x)
        contour = velocity_contour(dense, x)
        scale = math.hypot(contour.x1, contour.x2)
        assert math.hypot(direct.x1 - contour.x1, direct.x2 - contour.x2) <= 1e-3 * scale
    with pytest.raises(DomainError, match="vertex"):
        velocity_direct(field, Point(x1=1.0, x2=1.0))
    with pytest.raises(DomainError):
        velocity_direct(field, Point(x1=0.5, x2=-0.1))
    print("✓ Area quadrature and contour integration agree")


def test_velocity_on_contour_is_finite():
    field = square_field(4)
    u = velocity_contour(field, Point(x1=1.5, x2=1.0))
    assert math.isfinite(u.x1) and math.isfinite(u.x2)
    near = velocity_contour(field, Point(x1=1.5, x2=1.0 - 1e-9))
    assert u.x1 == pytest.approx(near.x1, abs=1e-6)
    assert u.x2 == pytest.approx(near.x2, abs=1e-6)
    print("✓ Velocity is continuous across the contour")


def test_velocity_batch_ordering():
    field = standard_battery()["two_patch"]
    assert velocity_batch(field, []) == []
    x = Point(x1=0.2, x2=0.3)
    assert velocity_batch(field, [x], threads=1) == [velocity_contour(field, x)]
    rng = np.random.default_rng(11)
    pts = rng.uniform(0.0, 1.5, size=(1000, 2))
    threaded = ContourVelocity(field, chunk_size=64, threads=4).velocity(pts)
    sequential = ContourVelocity(field, chunk_size=64, threads=1).velocity(pts)
    assert np.array_equal(threaded, sequential)
    print("✓ Concurrent batch equals sequential evaluation bitwise")


def test_main_term_square():
    field = square_field()
    value = main_term(field, Point(x1=0.1, x2=0.1))
    oracle, _ = dblquad(lambda y2, y1: y1 * y2 / (y1 * y1 + y2 * y2) ** 2, 1.0, 2.0, 1.0, 2.0,
                        epsabs=1e-13, epsrel=1e-12)
    assert value == pytest.approx(4.0 / math.pi * oracle, rel=1e-7)
    assert main_term(field, Point(x1=3.0, x2=3.0)) == 0.0
    with pytest.raises(DomainError):
        main_term(field, Point(x1=0.0, x2=0.0))
    print("✓ Main term matches the area integral and vanishes beyond the support")


def test_main_term_partial_overlap():
    field = square_field()
    r = 2.0
    value = main_term(field, Point(x1=r / math.sqrt(2.0), x2=r / math.sqrt(2.0)))

    def upper(y1):
        return 2.0

    def lower(y1):
        return max(1.0, math.sqrt(max(r * r - y1 * y1, 0.0)))

    oracle, _ = dblquad(lambda y2, y1: y1 * y2 / (y1 * y1 + y2 * y2) ** 2, 1.0, 2.0, lower, upper,
                        epsabs=1e-13, epsrel=1e-10)
    assert value == pytest.approx(4.0 / math.pi * oracle, rel=1e-6)
    print("✓ Main term integrates only the part of the patch outside |y| = |x|")


def test_decomposition_identity():
    field = standard_battery()["triangle"]
    x = Point(x1=0.25, x2=0.15)
    b1, b2 = extract_b(field, x)
    m = main_term(field, x)
    u = velocity_contour(field, x)
    assert (b1 + m) * x.x1 == pytest.approx(-u.x1, rel=1e-10)
    assert (b2 + m) * x.x2 == pytest.approx(u.x2, rel=1e-10)
    with pytest.raises(DomainError):
        extract_b(field, Point(x1=0.0, x2=0.3))
    print("✓ main_term + b_j reconstructs (-1)^j u_j / x_j")


def test_transposition_swaps_remainders():
    field = standard_battery()["l_shape"]
    x = Point(x1=0.3, x2=0.3)
    b1, b2 = extract_b(field, x)
    t1, t2 = extract_b(field.transposed(), x)
    assert t1 == pytest.approx(b2, rel=1e-6, abs=1e-9)
    assert t2 == pytest.approx(b1, rel=1e-6, abs=1e-9)
    print("✓ Transposing the field swaps b1 and b2 on the diagonal")


def test_domain_difference_integral():
    rng = np.random.default_rng(5)
    exact = 0.5 * math.log(8.0)
    for _ in range(5):
        r, theta = rng.uniform(0.05, 1.0), rng.uniform(0.0, 0.5 * math.pi)
        value, err = domain_difference_integral(Point(x1=r * math.cos(theta), x2=r * math.sin(theta)))
        assert 0.0 <= value <= 8.0
        assert value == pytest.approx(exact, rel=1e-6)
    with pytest.raises(DomainError):
        domain_difference_integral(Point(x1=0.0, x2=0.0))
    print(f"✓ Domain-difference integral equals ln(8)/2 = {exact:.6f}, well below 8")


def test_fit_kernel_constant():
    battery = standard_battery()
    fit = fit_kernel_constant(battery, fit_grid(3, 0.05, 0.8))
    assert fit.C >= 1.0
    assert len(fit.rows) == 5 * 9
    assert set(fit.rows["field"]) == set(battery)
    assert np.all(np.isfinite(fit.rows[["b1", "b2"]].to_numpy()))
    assert fit.rows["ratio1"].max() <= fit.C and fit.rows["ratio2"].max() <= fit.C
    print(f"✓ Fitted C = {fit.C:.4f} bounds every remainder ratio")


def test_far_field_decay():
    decay = far_field_decay(square_field())
    assert decay["speed_last"] < decay["speed_first"]
    assert decay["ratio"] <= 1.3
    print(f"✓ Far-field speed ratio {decay['ratio']:.3e} against the 1/|x|^2 law")


def test_battery_files():
    battery = standard_battery()
    assert list(battery) == ["square", "omega_region", "triangle", "l_shape", "two_patch"]
    assert all(f.all_odd for f in battery.values())
    shipped = load_battery(SRC_ROOT / "config" / "battery")
    assert set(shipped) == {"square", "triangle", "l_shape", "two_patch"}
    assert np.array_equal(shipped["square"].patches[0].contour, battery["square"].patches[0].contour)

    with tempfile.TemporaryDirectory() as tmp:
        path = write_patch_file(battery["two_patch"], Path(tmp) / "two_patch.txt")
        loaded = read_patch_file(path)
        assert format_patch_text(loaded) == format_patch_text(battery["two_patch"])
        with pytest.raises(ConfigurationError):
            load_battery(Path(tmp) / "missing")
    print("✓ Battery fields load from patch files")


def test_patch_text_errors():
    with pytest.raises(ConfigurationError, match="no patches"):
        parse_patch_text("# nothing here\n")
    with pytest.raises(ConfigurationError, match="symmetry flag"):
        parse_patch_text("1.0 1 2\n1 1\n2 1\n2 2\n")
    with pytest.raises(ConfigurationError, match="invalid patch"):
        parse_patch_text("1.0 1 1\n1 1\n1 2\n2 2\n2 1\n")
    field = parse_patch_text("0.5 1 0\n1 1\n2 1\n2 2\n\n-1 1 1\n3 3\n4 3\n4 4\n")
    assert len(field.patches) == 2
    assert field.patches[0].symmetry == SymmetryFlags(odd_x1=True, odd_x2=False)
    print("✓ Patch-file parser reports malformed input")


def main():
    """Run all tests."""
    print("=== Kernel Tests ===\n")
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
