"""Fixed-size cubic / bi-cubic polynomial algebra.

A bi-cubic polynomial ``sum q[k, l] x**k y**l`` is stored as a flat vector of
16 coefficients with ``index(k, l) = 4 * k + l`` (x-power major, y-power
fastest).  Every Kronecker product in this module respects that ordering:
in ``tensor4(A, B)`` the x-factor ``A`` acts on the 4-blocks and the y-factor
``B`` acts inside each block.

Corner moment data for a cell is ordered by corner
``(i, j), (i+1, j), (i+1, j+1), (i, j+1)`` and, within a corner, by moment
``(f, df/dx, df/dy, d2f/dxdy)``.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

I4 = np.eye(4)

# corner offsets (in cell units) in the order used by the cell data vector
CORNERS = ((0, 0), (1, 0), (1, 1), (0, 1))

# moment multi-indices (alpha_x, alpha_y) in moment-vector order
MOMENTS = ((0, 0), (1, 0), (0, 1), (1, 1))


def index(k, l):
    return 4 * k + l


@dataclass(frozen=True)
class CellGeometry:
    d1: float
    d2: float

    def __post_init__(self):
        if not (self.d1 > 0 and self.d2 > 0):
            raise ValueError(f"cell widths must be positive, got ({self.d1}, {self.d2})")


def basis_row(x):
    """Return the monomial row ``e(x)`` with entry ``4*l + m`` equal to ``x1**l * x2**m``."""
    x1, x2 = x
    return np.kron(x1 ** np.arange(4.0), x2 ** np.arange(4.0))


def cubic_row(x):
    return x ** np.arange(4.0)


# -- 4x4 operator matrices ---------------------------------------------------

D = np.array([[0.0, 1, 0, 0],
              [0, 0, 2, 0],
              [0, 0, 0, 3],
              [0, 0, 0, 0]])

M = np.array([[0.0, 0, 0, 0],
              [1, 0, 0, 0],
              [0, 1, 0, 0],
              [0, 0, 1, 0]])


def D_alpha(alpha):
    """Dilation: ``e0(x) @ D_alpha(a) @ c`` evaluates ``p(alpha * x)``."""
    return np.diag(alpha ** np.arange(4.0))


def T_shift(s):
    """Shift: ``e0(x) @ T_shift(s) @ c`` evaluates ``p(x - s)``."""
    return np.array([[1.0, -s, s**2, -s**3],
                     [0, 1, -2 * s, 3 * s**2],
                     [0, 0, 1, -3 * s],
                     [0, 0, 0, 1]])


def op_matrices():
    """The four cubic operator families as a dict of constants / constructors."""
    return {"D": D, "M": M, "D_alpha": D_alpha, "T_s": T_shift}


def tensor4(A, B):
    """Kronecker product with ``A`` acting on the x-power and ``B`` on the y-power."""
    return np.kron(A, B)


# -- interpolation -----------------------------------------------------------

_Q1 = [[1, 0, 0, 0], [0, 0, 1, 0], [-3, 0, -2, 0], [2, 0, 1, 0],
       [0, 1, 0, 0], [0, 0, 0, 1], [0, -3, 0, -2], [0, 2, 0, 1],
       [-3, -2, 0, 0], [0, 0, -3, -2], [9, 6, 6, 4], [-6, -4, -3, -2],
       [2, 1, 0, 0], [0, 0, 2, 1], [-6, -3, -4, -2], [4, 2, 2, 1]]
_Q2 = [[0, 0, 0, 0]] * 8 + [
       [3, -1, 0, 0], [0, 0, 3, -1], [-9, 3, -6, 2], [6, -2, 3, -1],
       [-2, 1, 0, 0], [0, 0, -2, 1], [6, -3, 4, -2], [-4, 2, -2, 1]]
_Q3 = [[0, 0, 0, 0]] * 10 + [
       [9, -3, -3, 1], [-6, 2, 3, -1], [0, 0, 0, 0], [0, 0, 0, 0],
       [-6, 3, 2, -1], [4, -2, -2, 1]]
_Q4 = [[0, 0, 0, 0], [0, 0, 0, 0], [3, 0, -1, 0], [-2, 0, 1, 0],
       [0, 0, 0, 0], [0, 0, 0, 0], [0, 3, 0, -1], [0, -2, 0, 1],
       [0, 0, 0, 0], [0, 0, 0, 0], [-9, -6, 3, 2], [6, 4, -3, -2],
       [0, 0, 0, 0], [0, 0, 0, 0], [6, 3, -2, -1], [-4, -2, 2, 1]]

_Q = np.hstack([np.array(b, dtype=float) for b in (_Q1, _Q2, _Q3, _Q4)])
_Q.setflags(write=False)


def interpolation_matrix():
    """16x16 matrix mapping unit-cell corner moments to bi-cubic coefficients."""
    return _Q.copy()


def scaling_matrix(geom):
    """``I (x) diag(1, d1, d2, d1*d2)``: physical corner moments to unit-cell moments."""
    return np.kron(I4, np.diag([1.0, geom.d1, geom.d2, geom.d1 * geom.d2]))


def bicubic_coeffs(corner_moments, geom):
    """Coefficients ``q`` of the cell interpolant in unit-cell coordinates."""
    return _Q @ (scaling_matrix(geom) @ np.asarray(corner_moments, dtype=float))


def evaluate(q, u, v, dx=0, dy=0):
    """Evaluate ``d^dx/du^dx d^dy/dv^dy`` of the unit-cell polynomial ``q`` at ``(u, v)``.

    ``u`` and ``v`` may be arrays (broadcast together).  Derivatives are with
    respect to the unit-cell coordinates.
    """
    c = tensor4(np.linalg.matrix_power(D, dx), np.linalg.matrix_power(D, dy)) @ np.asarray(q)
    c = c.reshape(4, 4)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    pu = u[..., None] ** np.arange(4.0)
    pv = v[..., None] ** np.arange(4.0)
    return np.einsum("...k,kl,...l->...", pu, c, pv)


# -- moment operators ----------------------------------------------------------

@lru_cache(maxsize=None)
def _tableau():
    MD = M @ D
    advect = tensor4(I4, I4) + tensor4(MD, I4) + tensor4(I4, MD)
    out = {}
    for a1, a2 in MOMENTS:
        deriv = tensor4(np.linalg.matrix_power(D, a1), np.linalg.matrix_power(D, a2))
        out[("advect", a1, a2)] = advect @ deriv
        out[("dx", a1, a2)] = tensor4(D, I4) @ deriv
        out[("dy", a1, a2)] = tensor4(I4, D) @ deriv
    return out


def operator_tableau():
    """Matrices ``T_A`` for the 12 moment operators.

    Keys are ``(family, a1, a2)`` with family one of ``"advect"`` for
    ``(1 + xi . grad) d^a1/dx d^a2/dy``, ``"dx"`` for ``d/dx d^a1 d^a2`` and
    ``"dy"`` for ``d/dy d^a1 d^a2``.
    """
    return {k: v.copy() for k, v in _tableau().items()}
