"""
Vortex patches and piecewise-constant vorticity fields.

A Patch is a constant-vorticity polygon in the first quadrant together with
symmetry flags; odd_x1 adds the sign-flipped mirror image across the x2-axis
and odd_x2 the sign-flipped image across the x1-axis. Images are never
stored, the velocity evaluators generate them implicitly.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np

from core.interfaces import DomainError
from core.schemas import Point
from velocity.polygon import (as_vertices, is_simple, points_in_polygon, polygons_cross,
                              segment_lengths, signed_area)

logger = logging.getLogger(__name__)

# Relative tolerance for the cached L1 mass
L1_RTOL = 1e-10


@dataclass(frozen=True)
class SymmetryFlags:
    odd_x1: bool = True
    odd_x2: bool = True

    @property
    def image_count(self) -> int:
        return (2 if self.odd_x1 else 1) * (2 if self.odd_x2 else 1)

    def transposed(self) -> "SymmetryFlags":
        return SymmetryFlags(odd_x1=self.odd_x2, odd_x2=self.odd_x1)


@dataclass(frozen=True, eq=False)
class Patch:
    """
    A constant-vorticity region bounded by a simple counterclockwise polygon.

    Attributes:
        contour: Read-only (N, 2) vertex array, counterclockwise
        strength: Vorticity value in [-1, 1]
        symmetry: Which odd images the patch carries
    """

    contour: np.ndarray
    strength: float = 1.0
    symmetry: SymmetryFlags = field(default_factory=SymmetryFlags)

    def __post_init__(self):
        vertices = as_vertices(self.contour)
        if not np.all(np.isfinite(vertices)):
            raise DomainError("patch contour has non-finite coordinates")
        if len(np.unique(vertices, axis=0)) < 3:
            raise DomainError("patch contour needs at least 3 distinct vertices")
        if not -1.0 <= self.strength <= 1.0:
            raise DomainError(f"patch strength {self.strength!r} outside [-1, 1]")
        if self.symmetry.odd_x1 and self.symmetry.odd_x2 and np.any(vertices < 0.0):
            raise DomainError("patch with both odd images must lie in the closed first quadrant")
        if signed_area(vertices) <= 0.0:
            raise DomainError("patch contour must be counterclockwise")
        if not is_simple(vertices):
            raise DomainError("patch contour is not simple")
        vertices.setflags(write=False)
        object.__setattr__(self, "contour", vertices)
        object.__setattr__(self, "strength", float(self.strength))

        lengths = segment_lengths(vertices)
        degenerate = int(np.count_nonzero(lengths == 0.0))
        object.__setattr__(self, "degenerate_segments", degenerate)
        if degenerate:
            logger.warning(f"Patch has {degenerate} zero-length segment(s); they are skipped")

    @classmethod
    def from_points(cls, points: Sequence[Union[Point, Tuple[float, float]]], strength: float = 1.0,
                    odd_x1: bool = True, odd_x2: bool = True) -> "Patch":
        coords = [(p.x1, p.x2) if isinstance(p, Point) else tuple(p) for p in points]
        return cls(np.array(coords, dtype=float), strength, SymmetryFlags(odd_x1, odd_x2))

    @property
    def area(self) -> float:
        """Area of the first-quadrant polygon (images excluded)."""
        return signed_area(self.contour)

    @property
    def l1_mass(self) -> float:
        """|strength| * area summed over the patch and its images."""
        return abs(self.strength) * self.area * self.symmetry.image_count

    @property
    def node_count(self) -> int:
        return len(self.contour)

    def points(self) -> List[Point]:
        return [Point(x1=float(x), x2=float(y)) for x, y in self.contour]

    def transposed(self) -> "Patch":
        """Mirror across the diagonal x1 = x2, keeping counterclockwise order."""
        swapped = self.contour[::-1, ::-1].copy()
        return Patch(swapped, self.strength, self.symmetry.transposed())

    def with_contour(self, contour: np.ndarray) -> "Patch":
        return Patch(contour, self.strength, self.symmetry)


@dataclass(frozen=True, eq=False)
class VorticityField:
    """
    An immutable collection of interior-disjoint patches.

    total_l1 caches the L1 mass including images.
    """

    patches: Tuple[Patch, ...]
    total_l1: float

    @classmethod
    def build(cls, patches: Sequence[Patch], check_disjoint: bool = True) -> "VorticityField":
        patches = tuple(patches)
        if check_disjoint:
            for i in range(len(patches)):
                for j in range(i + 1, len(patches)):
                    if _overlap(patches[i], patches[j]):
                        raise DomainError(f"patches {i} and {j} overlap")
        return cls(patches, float(sum(p.l1_mass for p in patches)))

    @classmethod
    def empty(cls) -> "VorticityField":
        return cls((), 0.0)

    def __post_init__(self):
        recomputed = sum(p.l1_mass for p in self.patches)
        if abs(recomputed - self.total_l1) > L1_RTOL * max(abs(recomputed), 1.0):
            raise DomainError(f"cached L1 mass {self.total_l1!r} does not match {recomputed!r}")

    @property
    def all_odd(self) -> bool:
        """True if every patch carries both odd images."""
        return all(p.symmetry.odd_x1 and p.symmetry.odd_x2 for p in self.patches)

    @property
    def odd_x1(self) -> bool:
        return all(p.symmetry.odd_x1 for p in self.patches)

    @property
    def odd_x2(self) -> bool:
        return all(p.symmetry.odd_x2 for p in self.patches)

    @property
    def max_strength(self) -> float:
        return max((abs(p.strength) for p in self.patches), default=0.0)

    @property
    def node_count(self) -> int:
        return sum(p.node_count for p in self.patches)

    @property
    def degenerate_segments(self) -> int:
        return sum(p.degenerate_segments for p in self.patches)

    def vertices(self) -> np.ndarray:
        """All patch vertices stacked into one (N, 2) array."""
        if not self.patches:
            return np.empty((0, 2))
        return np.vstack([p.contour for p in self.patches])

    def transposed(self) -> "VorticityField":
        return VorticityField.build([p.transposed() for p in self.patches], check_disjoint=False)

    def with_patches(self, patches: Sequence[Patch]) -> "VorticityField":
        return VorticityField.build(patches, check_disjoint=False)


def _overlap(a: Patch, b: Patch) -> bool:
    if polygons_cross(a.contour, b.contour):
        return True
    return bool(np.any(points_in_polygon(a.contour[:1], b.contour))
                or np.any(points_in_polygon(b.contour[:1], a.contour)))
