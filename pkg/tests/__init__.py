"""
Test suite for the half-plane Euler laboratory

Test organization:
- unit/ - One script per module
- integration/ - The command line end to end
"""

__all__ = []
