"""Fourth-order (space and time) staggered-grid FDTD for the periodic TE system.

Staggering, with ``k`` the stored array index:

* ``h[i, j]``  at ``(x_i, y_j)``, time ``t_n``
* ``ex[i, j]`` at ``(x_i, y_j + dx/2)``, time ``t_n - dt/2``
* ``ey[i, j]`` at ``(x_i + dx/2, y_j)``, time ``t_n - dt/2``

Space uses the (27/24, -1/24) staggered difference.  Time is leapfrog with
the third-derivative Taylor correction: each half update applies the curl to
``(1 + (c dt)**2 / 24 * Lap)`` of the other field.  ``Lap`` is the five-point
Laplacian; its O(dx**2) error enters multiplied by dt**2, so the scheme stays
fourth order, and it is stable up to CFL 1/sqrt(2) (leapfrog symbol 3.78 < 4
at the worst frequency).
"""
from dataclasses import dataclass, replace
import math

import numpy as np

from .scheme import CFLError, CFL_SLACK, NumericalFailure

FDTD4_CFL_LIMIT = 1.0 / math.sqrt(2.0)
C1, C3 = 27.0 / 24.0, -1.0 / 24.0


@dataclass(frozen=True)
class YeeState:
    n: int
    dx: float
    h: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    eps: float = 1.0
    mu: float = 1.0
    t: float = 0.0
    dt: float = 0.0
    step_count: int = 0
    origin: tuple = (0.0, 0.0)

    @property
    def c(self):
        return 1.0 / math.sqrt(self.eps * self.mu)

    def positions(self, field):
        """Coordinate arrays of the samples of ``field`` (``"h"``, ``"ex"``, ``"ey"``)."""
        sx, sy = {"h": (0.0, 0.0), "ex": (0.0, 0.5), "ey": (0.5, 0.0)}[field]
        x = self.origin[0] + (np.arange(self.n) + sx) * self.dx
        y = self.origin[1] + (np.arange(self.n) + sy) * self.dx
        return np.meshgrid(x, y, indexing="ij")

    def time_of(self, field):
        return self.t if field == "h" else self.t - 0.5 * self.dt


def diff_forward(f, dx, axis):
    """Staggered difference landing half a cell forward: ``[k] -> k + 1/2``."""
    r = lambda s: np.roll(f, -s, axis)
    return (C1 * (r(1) - f) + C3 * (r(2) - r(-1))) / dx


def diff_backward(f, dx, axis):
    """Staggered difference landing half a cell backward: ``[k] -> k - 1/2``."""
    r = lambda s: np.roll(f, -s, axis)
    return (C1 * (f - r(-1)) + C3 * (r(1) - r(-2))) / dx


def laplacian5(f, dx):
    return sum(np.roll(f, 1, ax) - 2 * f + np.roll(f, -1, ax) for ax in (0, 1)) / dx**2


def fdtd4_step(state, dt=None):
    """One leapfrog step: E from ``t - dt/2`` to ``t + dt/2``, then H to ``t + dt``."""
    dt = state.dt if dt is None else dt
    c = state.c
    lam = c * dt / state.dx
    if not 0 < lam <= FDTD4_CFL_LIMIT * (1 + CFL_SLACK):
        raise CFLError(f"FDTD4 CFL number {lam:.6g} outside (0, 1/sqrt(2)]")
    dx = state.dx
    corr = (c * dt) ** 2 / 24.0

    hw = state.h + corr * laplacian5(state.h, dx)
    ex = state.ex + (dt / state.eps) * diff_forward(hw, dx, 1)
    ey = state.ey - (dt / state.eps) * diff_forward(hw, dx, 0)

    curl = diff_backward(ex, dx, 1) - diff_backward(ey, dx, 0)
    h = state.h + (dt / state.mu) * (curl + corr * laplacian5(curl, dx))
    return replace(state, h=h, ex=ex, ey=ey, t=state.t + dt, dt=dt,
                   step_count=state.step_count + 1)


def run_fdtd4(state, steps, nan_check_every=16):
    for s in range(steps):
        state = fdtd4_step(state)
        if nan_check_every and (s + 1) % nan_check_every == 0:
            if not all(np.all(np.isfinite(getattr(state, f))) for f in ("h", "ex", "ey")):
                raise NumericalFailure(f"non-finite FDTD field at step {state.step_count}")
    return state


def yee_init_exact(n, dx, dt, fields, eps=1.0, mu=1.0, origin=(0.0, 0.0)):
    """Initial Yee state from an analytic solution.

    ``fields(X, Y, t)`` returns ``(H, Ex, Ey)`` value arrays; H is sampled at
    ``t = 0`` and E at ``t = -dt/2`` at the staggered positions.
    """
    proto = YeeState(n, dx, np.zeros((n, n)), np.zeros((n, n)), np.zeros((n, n)),
                     eps, mu, 0.0, dt, 0, origin)
    h = fields(*proto.positions("h"), 0.0)[0]
    ex = fields(*proto.positions("ex"), -0.5 * dt)[1]
    ey = fields(*proto.positions("ey"), -0.5 * dt)[2]
    return replace(proto, h=np.asarray(h, float), ex=np.asarray(ex, float),
                   ey=np.asarray(ey, float))


def fdtd_derivatives_fd3(f, dx, axis):
    """Derivative estimate along ``axis`` with the FDTD4 staggered stencil.

    The result ``[k]`` approximates the derivative half a cell forward of
    sample ``k``; callers compare against the exact derivative there.
    """
    return diff_forward(f, dx, axis)


def discrete_divergence(state):
    """``d ex/dx + d ey/dy`` at the cell centres ``(i + 1/2, j + 1/2)``."""
    return diff_forward(state.ex, state.dx, 0) + diff_forward(state.ey, state.dx, 1)
