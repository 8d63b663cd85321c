"""
Profile functions g, g', f, h and the regions Omega_eps, Q(r), D_s.
"""
