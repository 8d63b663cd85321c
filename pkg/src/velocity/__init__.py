"""
Velocity of odd patch fields: contour formula, direct quadrature and the main-term decomposition.
"""

from velocity.field import Patch, SymmetryFlags, VorticityField
from velocity.contour import ContourVelocity, velocity_batch, velocity_contour

__all__ = [
    "Patch",
    "SymmetryFlags",
    "VorticityField",
    "ContourVelocity",
    "velocity_batch",
    "velocity_contour"
]
