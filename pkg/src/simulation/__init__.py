"""
Contour dynamics of the unit patch with the co-evolving barrier.
"""
