"""Independent reference computations used by the tests.

Nothing here goes through the printed interpolation matrices, the operator
tableau or the closed-form quadrant moments.
"""
import math

import mpmath
import numpy as np
from numpy.polynomial import polynomial as P


def quadrant_moment_mp(l, m, quadrant, d, dps=30):
    """``(1/(2 pi d)) * int_{quarter disk} x^l y^m / sqrt(d^2 - x^2 - y^2)`` by mpmath quad."""
    with mpmath.workdps(dps):
        lo = (quadrant - 1) * mpmath.pi / 2
        d = mpmath.mpf(d)
        # r = d sin(s): dr / sqrt(d^2 - r^2) = ds, and the integrand separates
        radial = mpmath.quad(lambda s: (d * mpmath.sin(s)) ** (l + m + 1), [0, mpmath.pi / 2])
        angular = mpmath.quad(lambda p: mpmath.cos(p) ** l * mpmath.sin(p) ** m,
                              [lo, lo + mpmath.pi / 2])
        return float(radial * angular / (2 * mpmath.pi * d))


def hermite_patch(corner_data):
    """Bi-cubic coefficients ``C[..., k, l]`` of ``sum C[k, l] x^k y^l``.

    ``corner_data`` is a list of four ``((x, y), values)`` pairs where
    ``values[..., :]`` holds ``(f, fx, fy, fxy)`` at that corner (batched over
    leading axes).  The 16x16 Hermite system is solved directly.
    """
    rows, rhs = [], []
    for (cx, cy), vals in corner_data:
        for (a, b), comp in zip(((0, 0), (1, 0), (0, 1), (1, 1)), range(4)):
            row = np.zeros((4, 4))
            for k in range(a, 4):
                for l in range(b, 4):
                    fk = math.factorial(k) // math.factorial(k - a)
                    fl = math.factorial(l) // math.factorial(l - b)
                    row[k, l] = fk * fl * cx ** (k - a) * cy ** (l - b)
            rows.append(row.ravel())
            rhs.append(np.asarray(vals)[..., comp])
    sol = np.linalg.solve(np.array(rows), np.stack(rhs, axis=0).reshape(16, -1))
    batch = np.shape(rhs[0])
    return np.moveaxis(sol, 0, -1).reshape(batch + (4, 4))


def deriv(C, a, b):
    out = C
    if a:
        out = P.polyder(out, a, axis=-2)
    if b:
        out = P.polyder(out, b, axis=-1)
    return out


def polyval_points(C, X, Y):
    """Evaluate batched coefficients ``C[..., k, l]`` at points ``X, Y`` (1-D)."""
    kx, ky = C.shape[-2:]
    xp = X[:, None] ** np.arange(kx)
    yp = Y[:, None] ** np.arange(ky)
    return np.einsum("...kl,pk,pl->...p", C, xp, yp)


def _gauss(n, lo, hi):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def spherical_mean_update(patches, R, dt, eps=1.0, mu=1.0, npts=24):
    """One Poisson-formula step at the origin for piecewise bi-cubic data.

    ``patches[q] = {"h": C, "ex": C, "ey": C}`` gives the polynomial used on
    quadrant ``q`` (1..4, counter-clockwise from ``x, y > 0``), in coordinates
    relative to the node; ``C`` may carry leading batch axes.  Returns
    ``{"h": (..., 4), "ex": ..., "ey": ...}`` moment vectors ``(f, fx, fy, fxy)``.
    """
    s, ws = _gauss(npts, 0.0, math.pi / 2)
    out = {}
    for q in (1, 2, 3, 4):
        phi, wp = _gauss(npts, (q - 1) * math.pi / 2, q * math.pi / 2)
        S, PHI = np.meshgrid(s, phi, indexing="ij")
        # r = R sin(s) turns dr / sqrt(R^2 - r^2) into ds
        W = (np.outer(ws, wp) * R * np.sin(S)).ravel()
        X = (R * np.sin(S) * np.cos(PHI)).ravel()
        Y = (R * np.sin(S) * np.sin(PHI)).ravel()
        C = patches[q]
        for j, (a, b) in enumerate(((0, 0), (1, 0), (0, 1), (1, 1))):
            def ev(name, da=0, db=0):
                return polyval_points(deriv(C[name], a + da, b + db), X, Y)

            def spherical(name):
                return ev(name) + X * ev(name, 1, 0) + Y * ev(name, 0, 1)

            dtf = {"h": (ev("ex", 0, 1) - ev("ey", 1, 0)) / mu,
                   "ex": ev("h", 0, 1) / eps,
                   "ey": -ev("h", 1, 0) / eps}
            for name in ("h", "ex", "ey"):
                val = (spherical(name) + dt * dtf[name]) @ W / (2 * math.pi * R)
                if name not in out:
                    out[name] = np.zeros(val.shape + (4,))
                out[name][..., j] += val
    return out


# quadrant -> cell corner offsets (grid units): (i0, i1, j0, j1)
QUADRANT_CELLS = {1: (0, 1, 0, 1), 2: (-1, 0, 0, 1), 3: (-1, 0, -1, 0), 4: (0, 1, -1, 0)}


def oracle_step(h, ex, ey, dx, dt, c=1.0, eps=1.0, mu=1.0):
    """Dense evaluation of one update at every node of a periodic grid.

    ``h, ex, ey`` have shape ``(n, n, 4)``; the piecewise bi-cubic around each
    node is rebuilt from scratch and its spherical means are integrated by
    Gauss quadrature.
    """
    fields = {"h": h, "ex": ex, "ey": ey}
    patches = {}
    for q, (a0, a1, b0, b1) in QUADRANT_CELLS.items():
        patches[q] = {}
        for name, f in fields.items():
            data = [((di * dx, dj * dx), np.roll(f, (-di, -dj), axis=(0, 1)))
                    for di in (a0, a1) for dj in (b0, b1)]
            patches[q][name] = hermite_patch(data)
    res = spherical_mean_update(patches, c * dt, dt, eps, mu)
    return res["h"], res["ex"], res["ey"]


def smooth_periodic_moments(n, rng, modes=3):
    """Random trigonometric polynomial on the unit torus with exact moments ``(n, n, 4)``."""
    x = np.arange(n) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    out = np.zeros((n, n, 4))
    for k in range(-modes, modes + 1):
        for l in range(-modes, modes + 1):
            a, b = rng.normal(size=2) / (1 + k * k + l * l)
            ph = 2 * math.pi * (k * X + l * Y)
            kx, ky = 2 * math.pi * k, 2 * math.pi * l
            c, s = np.cos(ph), np.sin(ph)
            # f = a cos + b sin
            out[..., 0] += a * c + b * s
            out[..., 1] += kx * (-a * s + b * c)
            out[..., 2] += ky * (-a * s + b * c)
            out[..., 3] += kx * ky * (-a * c - b * s)
    return out
