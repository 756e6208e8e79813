"""Multi-moment (CIP-type) solver for the periodic 2D TE Maxwell equations.

Exact Poisson-formula time integration of bi-cubic Hermite moment data, with
von Neumann analysis, a derivative-free bilinear variant and a fourth-order
FDTD comparator.
"""
__version__ = "0.1.0"
