"""Poisson-kernel moments of monomials over the quarter disks.

``L(g | B) = 1/(2 pi d) * int_B g(xi) / sqrt(d**2 - |xi|**2) dxi`` with
``d = c * dt``.  Quadrants are numbered counter-clockwise from the
``(+, +)`` quadrant.  The closed forms are checked against an independent
polar Gauss-Legendre quadrature (:func:`quadrant_moment_oracle`).
"""
import math

import numpy as np

# quadrant 1 moment for d = 1, entry 4*l + m <-> x**l y**m
_PI = math.pi
_BASE = np.array([
    1 / 4, 1 / 8, 1 / 12, 1 / 16,
    1 / 8, 1 / (6 * _PI), 1 / 32, 1 / (15 * _PI),
    1 / 12, 1 / 32, 1 / 60, 1 / 96,
    1 / 16, 1 / (15 * _PI), 1 / 96, 2 / (105 * _PI),
])
_BASE.setflags(write=False)

_POW_X = np.repeat(np.arange(4), 4)
_POW_Y = np.tile(np.arange(4), 4)

# (sign of x, sign of y) for quadrants 1..4
QUADRANT_SIGNS = {1: (1, 1), 2: (-1, 1), 3: (-1, -1), 4: (1, -1)}


def _check_quadrant(quadrant):
    if quadrant not in QUADRANT_SIGNS:
        raise ValueError(f"quadrant must be 1..4, got {quadrant!r}")


def quadrant_moments(quadrant, d_c):
    """Closed-form vector ``L(e | B_quadrant)`` for disk radius ``d_c``."""
    _check_quadrant(quadrant)
    if not d_c > 0:
        raise ValueError(f"d_c must be positive, got {d_c}")
    sx, sy = QUADRANT_SIGNS[quadrant]
    return lambda_row(sx * d_c, sy * d_c)


def lambda_row(lam, mu):
    """``Lambda(lam, mu)``: quadrant-1 moments with x scaled by ``lam`` and y by ``mu``.

    Signed arguments give the other quadrants, e.g. ``lambda_row(-lam, mu)`` is
    the quadrant-2 row.  Powers are built by repeated multiplication so that
    ``lambda_row(d, d)`` agrees with :func:`quadrant_moments` bit for bit.
    """
    px = np.array([1.0, lam, lam * lam, lam * lam * lam])
    py = np.array([1.0, mu, mu * mu, mu * mu * mu])
    return _BASE * px[_POW_X] * py[_POW_Y]


# -- oracle ------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _gauss(a, b):
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (b + a)
    return x, 0.5 * (b - a) * _GL_WEIGHTS


def quadrant_moment_oracle(l, m, quadrant, d_c):
    """Poisson-kernel moment of ``x**l y**m`` over one quarter disk by quadrature.

    Polar coordinates ``xi = d_c * r * (cos t, sin t)``; the radial factor uses
    ``r = sin(u)`` which turns ``r**(l+m+1) / sqrt(1 - r**2) dr`` into the
    smooth integrand ``sin(u)**(l+m+1) du`` on ``[0, pi/2]``.
    """
    _check_quadrant(quadrant)
    if not d_c > 0:
        raise ValueError(f"d_c must be positive, got {d_c}")
    u, wu = _gauss(0.0, 0.5 * math.pi)
    radial = np.sum(wu * np.sin(u) ** (l + m + 1))
    t0 = 0.5 * math.pi * (quadrant - 1)
    t, wt = _gauss(t0, t0 + 0.5 * math.pi)
    angular = np.sum(wt * np.cos(t) ** l * np.sin(t) ** m)
    return d_c ** (l + m) * radial * angular / (2 * math.pi)
