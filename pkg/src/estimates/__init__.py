"""
Extremal approach velocity and double-exponential gradient bounds.
"""
