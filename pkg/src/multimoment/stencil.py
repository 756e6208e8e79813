"""Per-node update blocks of the multi-moment scheme.

For a node ``(i, j)`` the four surrounding cells are numbered
counter-clockwise, ``C1 = [x_i, x_i+1] x [y_j, y_j+1]``, ``C2`` to the left,
``C3`` below-left and ``C4`` below.  Each cell contributes a 4x16 matrix (one
row per output moment, one column per corner moment of that cell) and the
columns are scattered onto the 3x3 neighbour layout

    7 8 9
    4 5 6        k = 1..9  <->  (i-1, j-1), (i, j-1), ..., (i+1, j+1)
    1 2 3

to give nine 4x4 blocks per operator family.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import poly
from .quadrature import lambda_row

FAMILIES = ("advect", "dx", "dy")

# neighbour k (0-based) -> (di, dj)
NEIGHBOR_OFFSETS = tuple((di, dj) for dj in (-1, 0, 1) for di in (-1, 0, 1))

# cell -> neighbour index (0-based) of its corners (i,j), (i+1,j), (i+1,j+1), (i,j+1)
CELL_CORNER_NEIGHBORS = {
    1: (4, 5, 8, 7),
    2: (3, 4, 7, 6),
    3: (0, 1, 4, 3),
    4: (1, 2, 5, 4),
}

# quadrant signs (x, y) of the quarter disk lying inside each cell
_CELL_SIGNS = {1: (1, 1), 2: (-1, 1), 3: (-1, -1), 4: (1, -1)}

_TM1 = poly.T_shift(-1.0)
_CELL_SHIFTS = {
    1: np.eye(16),
    2: poly.tensor4(_TM1, poly.I4),
    3: poly.tensor4(_TM1, _TM1),
    4: poly.tensor4(poly.I4, _TM1),
}


@dataclass(frozen=True)
class StencilGeometry:
    d1_left: float
    d1_right: float
    d2_down: float
    d2_up: float
    dt: float
    c: float = 1.0
    # False only for diagnostics (stability scans beyond CFL 1)
    enforce_cfl: bool = True

    def __post_init__(self):
        widths = (self.d1_left, self.d1_right, self.d2_down, self.d2_up)
        if min(widths) <= 0:
            raise ValueError(f"cell widths must be positive, got {widths}")
        if not (self.dt > 0 and self.c > 0):
            raise ValueError("dt and c must be positive")
        if self.enforce_cfl and self.c * self.dt > min(widths) * (1 + 1e-12):
            raise ValueError(
                f"c*dt = {self.c * self.dt} exceeds the smallest cell width {min(widths)}; "
                "the nine-point stencil needs c*dt <= dx")

    @classmethod
    def uniform(cls, dx, dt, c=1.0, enforce_cfl=True):
        return cls(dx, dx, dx, dx, dt, c, enforce_cfl)

    def cell_widths(self, cell):
        d1 = self.d1_right if cell in (1, 4) else self.d1_left
        d2 = self.d2_up if cell in (1, 2) else self.d2_down
        return d1, d2


@dataclass(frozen=True, eq=False)
class StencilSet:
    """Blocks ``a, b, c`` of shape (9, 4, 4) for one node geometry.

    ``b`` and ``c`` carry the ``c*dt`` factor of the x- and y-derivative
    families, so the scheme couples fields with ``1/(c mu)`` and ``1/(c eps)``.
    """
    geometry: StencilGeometry
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def blocks(self, family):
        return {"advect": self.a, "dx": self.b, "dy": self.c}[family]

    def wide(self, family):
        """The 4x36 matrix ``[m_1 ... m_9]``."""
        return np.hstack(list(self.blocks(family)))

    def nonzero_mask(self, family, tol=1e-13):
        w = self.wide(family)
        return np.abs(w) > tol * np.abs(w).max()


def assemble_A(geom, family):
    """Return ``{1: A1, ..., 4: A4}``, the 4x16 per-cell contribution matrices."""
    if family not in FAMILIES:
        raise ValueError(f"unknown operator family {family!r}")
    if not isinstance(geom, StencilGeometry):
        raise TypeError("geom must be a StencilGeometry")
    tableau = poly._tableau()
    Q = poly._Q
    cdt = geom.c * geom.dt
    out = {}
    for cell in (1, 2, 3, 4):
        d1, d2 = geom.cell_widths(cell)
        lam, mu = cdt / d1, cdt / d2
        sx, sy = _CELL_SIGNS[cell]
        lrow = lambda_row(sx * lam, sy * mu)
        right = _CELL_SHIFTS[cell] @ Q @ poly.scaling_matrix(poly.CellGeometry(d1, d2))
        extra = {"advect": 1.0, "dx": lam, "dy": mu}[family]
        rows = []
        for a1, a2 in poly.MOMENTS:
            pref = extra / (d1**a1 * d2**a2)
            rows.append(pref * (lrow @ tableau[(family, a1, a2)] @ right))
        out[cell] = np.array(rows)
    return out


def _slice_blocks(A):
    blocks = np.zeros((9, 4, 4))
    for cell, Ak in A.items():
        for t, k in enumerate(CELL_CORNER_NEIGHBORS[cell]):
            blocks[k] += Ak[:, 4 * t:4 * t + 4]
    return blocks


@lru_cache(maxsize=64)
def _assemble_cached(geom):
    a, b, c = (_slice_blocks(assemble_A(geom, fam)) for fam in FAMILIES)
    for arr in (a, b, c):
        arr.setflags(write=False)
    return StencilSet(geom, a, b, c)


def assemble_stencils(geom):
    """Assemble (and cache) the nine ``a``, ``b``, ``c`` blocks for ``geom``."""
    if not isinstance(geom, StencilGeometry):
        raise TypeError("geom must be a StencilGeometry")
    return _assemble_cached(geom)


def uniform_stencils(lam, dx=1.0, c=1.0, enforce_cfl=True):
    """Stencils on a uniform grid at CFL number ``lam = c*dt/dx``."""
    return assemble_stencils(StencilGeometry.uniform(dx, lam * dx / c, c, enforce_cfl))
