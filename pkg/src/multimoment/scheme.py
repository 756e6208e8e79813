"""Field state and time steppers for the periodic 2D TE Maxwell system.

    dEx/dt = (1/eps) dHz/dy,  dEy/dt = -(1/eps) dHz/dx,
    dHz/dt = (1/mu) (dEx/dy - dEy/dx).

Arrays are indexed ``[i, j]`` with ``i`` along x and ``j`` along y; node
``(i, j)`` sits at ``(x0 + i*dx, y0 + j*dx)`` and indices wrap modulo ``n``.
Multi-moment fields carry a trailing axis of length 4 holding
``(f, df/dx, df/dy, d2f/dxdy)`` in physical units.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from .stencil import NEIGHBOR_OFFSETS, StencilGeometry, assemble_stencils

CFL_SLACK = 1e-12


class CFLError(ValueError):
    """Raised when ``c*dt`` exceeds what a scheme's stencil supports."""


@dataclass(frozen=True)
class FieldState:
    n: int
    dx: float
    h: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    eps: float = 1.0
    mu: float = 1.0
    t: float = 0.0
    step_count: int = 0
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        shape = (self.n, self.n, 4)
        for name in ("h", "ex", "ey"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {getattr(self, name).shape}")

    @property
    def c(self):
        return 1.0 / math.sqrt(self.eps * self.mu)

    def coords(self):
        """Node coordinate arrays ``(X, Y)`` of shape (n, n)."""
        x = self.origin[0] + np.arange(self.n) * self.dx
        y = self.origin[1] + np.arange(self.n) * self.dx
        return np.meshgrid(x, y, indexing="ij")

    def stacked(self):
        return np.concatenate([self.h, self.ex, self.ey], axis=-1)

    def with_fields(self, h, ex, ey, **kw):
        return replace(self, h=h, ex=ex, ey=ey, **kw)


@dataclass(frozen=True)
class BilinearState:
    n: int
    dx: float
    h: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    eps: float = 1.0
    mu: float = 1.0
    t: float = 0.0
    step_count: int = 0
    origin: tuple = (0.0, 0.0)

    @property
    def c(self):
        return 1.0 / math.sqrt(self.eps * self.mu)

    def coords(self):
        x = self.origin[0] + np.arange(self.n) * self.dx
        y = self.origin[1] + np.arange(self.n) * self.dx
        return np.meshgrid(x, y, indexing="ij")


def neighbor(f, k):
    """Array whose ``[i, j]`` entry is ``f[i+di, j+dj]`` for neighbour ``k`` (0-based)."""
    di, dj = NEIGHBOR_OFFSETS[k]
    return np.roll(f, (-di, -dj), axis=(0, 1))


def check_cfl(c, dt, dx, limit=1.0):
    lam = c * dt / dx
    if lam > limit * (1 + CFL_SLACK):
        raise CFLError(f"CFL number {lam:.6g} exceeds the stability limit {limit:.6g}")
    if lam <= 0:
        raise CFLError(f"time step must be positive (CFL number {lam:.6g})")
    return lam


# -- multi-moment scheme -----------------------------------------------------

def update_matrix(stencils, eps, mu):
    """The 12x108 matrix mapping the stacked 9-neighbour moments to new moments.

    Column blocks follow ``[h_1..h_9 | ex_1..ex_9 | ey_1..ey_9]``, each of
    width 4; row blocks are ``h, ex, ey``.
    """
    c = 1.0 / math.sqrt(eps * mu)
    a, b, cc = (np.hstack(list(m)) for m in (stencils.a, stencils.b, stencils.c))
    z = np.zeros_like(a)
    km, ke = 1.0 / (c * mu), 1.0 / (c * eps)
    return np.block([
        [a, km * cc, -km * b],
        [ke * cc, a, z],
        [-ke * b, z, a],
    ])


def _gather(fields):
    """Stack the 9 neighbour copies of each field: shape (n, n, 108)."""
    return np.concatenate([neighbor(f, k) for f in fields for k in range(9)], axis=-1)


def step_multimoment(state, stencils, dt, kernel=None):
    """Advance ``state`` by one step of the multi-moment update.

    Returns a new :class:`FieldState`; the input is not modified.
    """
    check_cfl(state.c, dt, state.dx)
    g = stencils.geometry
    expected = StencilGeometry.uniform(state.dx, dt, state.c)
    if not np.allclose([g.d1_left, g.d1_right, g.d2_down, g.d2_up, g.dt, g.c],
                       [expected.d1_left, expected.d1_right, expected.d2_down,
                        expected.d2_up, expected.dt, expected.c], rtol=1e-12, atol=0):
        raise ValueError(f"stencil geometry {g} does not match state (dx={state.dx}, dt={dt})")
    K = update_matrix(stencils, state.eps, state.mu) if kernel is None else kernel
    new = _gather((state.h, state.ex, state.ey)) @ K.T
    return state.with_fields(new[..., 0:4], new[..., 4:8], new[..., 8:12],
                             t=state.t + dt, step_count=state.step_count + 1)


def run_multimoment(state, lam, steps, nan_check_every=16):
    """Take ``steps`` steps at CFL number ``lam``; dt is fixed for the run."""
    dt = lam * state.dx / state.c
    check_cfl(state.c, dt, state.dx)
    stencils = assemble_stencils(StencilGeometry.uniform(state.dx, dt, state.c))
    K = update_matrix(stencils, state.eps, state.mu)
    for s in range(steps):
        state = step_multimoment(state, stencils, dt, kernel=K)
        if nan_check_every and (s + 1) % nan_check_every == 0:
            _check_finite(state)
    _check_finite(state)
    return state


class NumericalFailure(RuntimeError):
    pass


def _check_finite(state):
    for name in ("h", "ex", "ey"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise NumericalFailure(f"non-finite values in {name} at step {state.step_count}")


def step_multimoment_counted(state, stencils, dt):
    """Sparse re-implementation of :func:`step_multimoment` that counts FMAs.

    Only the nonzero entries of the ``a``, ``b``, ``c`` blocks are visited.
    Returns ``(new_state, fma_per_node)``.
    """
    check_cfl(state.c, dt, state.dx)
    c = state.c
    km, ke = 1.0 / (c * state.mu), 1.0 / (c * state.eps)
    shifted = {name: [neighbor(getattr(state, name), k) for k in range(9)]
               for name in ("h", "ex", "ey")}
    # output field -> [(input field, family, scale), ...]
    plan = {
        "h": [("h", "advect", 1.0), ("ex", "dy", km), ("ey", "dx", -km)],
        "ex": [("h", "dy", ke), ("ex", "advect", 1.0)],
        "ey": [("h", "dx", -ke), ("ey", "advect", 1.0)],
    }
    out = {}
    fma = 0
    for target, terms in plan.items():
        acc = np.zeros_like(state.h)
        for src, fam, scale in terms:
            blocks = stencils.blocks(fam)
            mask = stencils.nonzero_mask(fam)
            for row in range(4):
                for col in range(36):
                    if not mask[row, col]:
                        continue
                    k, m = divmod(col, 4)
                    acc[..., row] += (scale * blocks[k][row, m]) * shifted[src][k][..., m]
                    fma += 1
        out[target] = acc
    new = state.with_fields(out["h"], out["ex"], out["ey"],
                            t=state.t + dt, step_count=state.step_count + 1)
    return new, fma


# -- initialisation ----------------------------------------------------------

def init_from_closures(n, dx, eps, mu, fns, origin=(0.0, 0.0), t=0.0):
    """Sample all four moments of each field from analytic evaluators.

    ``fns`` maps ``"h"``, ``"ex"``, ``"ey"`` to callables ``f(X, Y)`` returning
    a ``(..., 4)`` array of ``(f, fx, fy, fxy)``.  Missing fields are zero.
    """
    x = origin[0] + np.arange(n) * dx
    y = origin[1] + np.arange(n) * dx
    X, Y = np.meshgrid(x, y, indexing="ij")
    fields = {}
    for name in ("h", "ex", "ey"):
        fn = fns.get(name)
        if fn is None:
            fields[name] = np.zeros((n, n, 4))
        else:
            fields[name] = np.broadcast_to(np.asarray(fn(X, Y), dtype=float), (n, n, 4)).copy()
    return FieldState(n, dx, fields["h"], fields["ex"], fields["ey"], eps, mu, t=t, origin=origin)


def fd4_derivative(f, dx, axis):
    """Fourth-order centred periodic difference of ``f`` along ``axis``."""
    return (-np.roll(f, -2, axis) + 8 * np.roll(f, -1, axis)
            - 8 * np.roll(f, 1, axis) + np.roll(f, 2, axis)) / (12 * dx)


def fd_moments(values, dx):
    fx = fd4_derivative(values, dx, 0)
    fy = fd4_derivative(values, dx, 1)
    fxy = fd4_derivative(fx, dx, 1)
    return np.stack([values, fx, fy, fxy], axis=-1)


def init_derivatives_by_fd(values, dx, eps=1.0, mu=1.0, origin=(0.0, 0.0), t=0.0):
    """Build a :class:`FieldState` from nodal values only.

    ``values`` maps field names to (n, n) arrays; derivative moments come
    from :func:`fd4_derivative`, the mixed one by composing x and y.
    """
    arrays = [np.asarray(values[k], dtype=float) for k in ("h", "ex", "ey") if k in values]
    n = arrays[0].shape[0]
    moments = {k: fd_moments(np.asarray(values[k], dtype=float), dx) if k in values
               else np.zeros((n, n, 4)) for k in ("h", "ex", "ey")}
    return FieldState(n, dx, moments["h"], moments["ex"], moments["ey"], eps, mu, t=t, origin=origin)


def init_sharp_square(n, dx=None, lo=0.25, hi=0.75):
    """Indicator of the closed square ``[lo, hi]^2`` on ``[0, 1)^2`` with zero derivatives."""
    if dx is None:
        dx = 1.0 / n
    x = np.arange(n) * dx
    # closed set; tolerance absorbs i*dx rounding at the boundary
    tol = 1e-9 * dx
    inside = (x >= lo - tol) & (x <= hi + tol)
    h = np.zeros((n, n, 4))
    h[..., 0] = np.outer(inside, inside).astype(float)
    z = np.zeros((n, n, 4))
    return FieldState(n, dx, h, z, z.copy())


# -- derivative-free bilinear scheme -------------------------------------------

def bilinear_stencils(lam):
    """Nine-point weights ``(L1, L2, L3)`` in neighbour order k = 1..9.

    ``L2`` and ``L3`` approximate ``dx * d/dy`` and ``dx * d/dx``.
    """
    p = math.pi
    corner = lam**2 / (2 * p)
    edge = (p - 2 * lam) * lam / (2 * p)
    L1 = np.array([corner, edge, corner, edge, 1 - 2 * lam + 2 * lam**2 / p,
                   edge, corner, edge, corner])
    e, s = lam / 8, (2 - lam) / 4
    L2 = np.array([-e, -s, -e, 0, 0, 0, e, s, e])
    L3 = np.array([-e, 0, e, -s, 0, s, -e, 0, e])
    return L1, L2, L3


def _apply9(w, f):
    return sum(w[k] * neighbor(f, k) for k in range(9) if w[k] != 0)


def step_bilinear(state, lam):
    """One step of the derivative-free nine-point scheme at CFL number ``lam``."""
    if not 0 < lam <= 1 + CFL_SLACK:
        raise CFLError(f"CFL number {lam} outside (0, 1]")
    c = state.c
    L1, L2, L3 = bilinear_stencils(lam)
    # printed L2, L3 are dx-scaled derivatives; the coupling needs c*dt = lam*dx
    km, ke = lam / (c * state.mu), lam / (c * state.eps)
    h, ex, ey = state.h, state.ex, state.ey
    dyex, dxey = _apply9(L2, ex), _apply9(L3, ey)
    dyh, dxh = _apply9(L2, h), _apply9(L3, h)
    dt = lam * state.dx / c
    return replace(
        state,
        h=_apply9(L1, h) + km * dyex - km * dxey,
        ex=ke * dyh + _apply9(L1, ex),
        ey=-ke * dxh + _apply9(L1, ey),
        t=state.t + dt,
        step_count=state.step_count + 1,
    )
