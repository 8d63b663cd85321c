"""
Half-plane Euler gradient-growth laboratory.

Packages:
- core: interfaces, validated records and the experiment base
- utils: system and experiment configuration, quadrature helpers
- geometry: profile functions and regions of the barrier construction
- velocity: contour-dynamics and direct velocity evaluation
- estimates: the extremal approach-velocity problem and growth bounds
- simulation: contour dynamics with the co-evolving barrier
- lab: subcommand experiments, reports and the command line

Modules import each other absolutely (``from core.interfaces import ...``)
with this directory on sys.path.
"""

__version__ = "1.0.0"
