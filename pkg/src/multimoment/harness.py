"""Experiment drivers: plane-wave convergence studies, sharp and smooth
profile runs, bi-cubic export and operation counts."""
from dataclasses import dataclass, field
import csv
import json
import math
import subprocess

import numpy as np

from . import __version__, poly
from .reference import (FDTD4_CFL_LIMIT, YeeState, fdtd_derivatives_fd3, run_fdtd4,
                        yee_init_exact)
from .scheme import (BilinearState, FieldState, init_from_closures, init_derivatives_by_fd,
                     init_sharp_square, neighbor, run_multimoment, step_bilinear,
                     step_multimoment_counted)
from .stencil import uniform_stencils

SCHEMES = ("multimoment", "bilinear", "fdtd4")
PLANE_WAVE_ORIGIN = (-0.5, -0.5)


# -- exact solutions -----------------------------------------------------------

def _periodic_gaussian(phi, period, sigma_inv2, images=3):
    """Smooth periodisation of ``exp(-phi**2 * sigma_inv2)`` and its first two derivatives."""
    r = np.mod(phi + 0.5 * period, period) - 0.5 * period
    g0 = np.zeros_like(r)
    g1 = np.zeros_like(r)
    g2 = np.zeros_like(r)
    for k in range(-images, images + 1):
        z = r - k * period
        e = np.exp(-z * z * sigma_inv2)
        g0 += e
        g1 += -2 * sigma_inv2 * z * e
        g2 += (4 * sigma_inv2**2 * z * z - 2 * sigma_inv2) * e
    return g0, g1, g2


@dataclass(frozen=True)
class PlaneWaveSpec:
    """Sum of periodic gaussian plane waves travelling along ``(cos t_m, -sin t_m)``.

    Angles are ``t_m = arctan(m)``; each mode is periodic along its direction
    of travel with period ``cos t_m`` so that the sum is 1-periodic in x and y
    for ``eps = mu = 1``.
    """
    sigma_inv2: float = 500.0
    modes: tuple = (0, 1, 2, 3)

    def __post_init__(self):
        if not self.sigma_inv2 > 0:
            raise ValueError("sigma must be positive")

    @property
    def sigma(self):
        return 1.0 / math.sqrt(self.sigma_inv2)

    def angles(self):
        return [math.atan(m) for m in self.modes]

    def moments(self, X, Y, t):
        """``(H, Ex, Ey)`` moment arrays ``(..., 4)`` = ``(f, fx, fy, fxy)``."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        H = np.zeros(X.shape + (4,))
        Ex = np.zeros_like(H)
        Ey = np.zeros_like(H)
        for th in self.angles():
            c, s = math.cos(th), math.sin(th)
            g0, g1, g2 = _periodic_gaussian(X * c - Y * s - t, c, self.sigma_inv2)
            mom = np.stack([g0, c * g1, -s * g1, -c * s * g2], axis=-1)
            H += mom
            Ex += s * mom
            Ey += c * mom
        return H, Ex, Ey

    def values(self, X, Y, t):
        return tuple(m[..., 0] for m in self.moments(X, Y, t))


def plane_wave_fields(spec, t):
    """Closures ``{"h": f(X, Y), "ex": ..., "ey": ...}`` returning moment arrays at time ``t``."""
    return {name: (lambda X, Y, k=k: spec.moments(X, Y, t)[k])
            for k, name in enumerate(("h", "ex", "ey"))}


# -- error metrics -------------------------------------------------------------

FIELDS = ("h", "ex", "ey")


def _field_samples(state, exact):
    """Yield ``(numeric_values, X, Y, t, exact_moments, field_index)`` per field."""
    for k, name in enumerate(FIELDS):
        if isinstance(state, YeeState):
            X, Y = state.positions(name)
            t = state.time_of(name)
            num = getattr(state, name)
        else:
            X, Y = state.coords()
            t = state.t
            num = getattr(state, name)
            if isinstance(state, FieldState):
                num = num[..., 0]
        yield name, num, X, Y, t, k


def error_eps1(state, exact):
    """Max-norm value error over all nodes and the three fields."""
    err = 0.0
    for name, num, X, Y, t, k in _field_samples(state, exact):
        ref = exact.moments(X, Y, t)[k][..., 0]
        err = max(err, float(np.max(np.abs(num - ref))))
    return err


def error_eps2(state, exact, source=None, mode="normwise", tau=1e-8):
    """Relative first-derivative error.

    ``source="moments"`` reads the derivative moments of a multi-moment state;
    ``"fd3"`` differentiates nodal values with the FDTD4 staggered stencil and
    compares against the exact derivative half a cell forward.

    ``mode="normwise"`` (default) takes ``max|num - exact| / max|exact|`` per
    field and direction, then the max over those.  ``"pointwise"`` divides
    node by node, skipping nodes with ``|exact| < tau * max|exact|``.
    Directions in which the exact derivative vanishes identically carry no
    relative error and are skipped.
    """
    if source is None:
        source = "moments" if isinstance(state, FieldState) else "fd3"
    if source == "moments" and not isinstance(state, FieldState):
        raise ValueError("derivative moments are only available for multi-moment states")
    worst = 0.0
    for name, num, X, Y, t, k in _field_samples(state, exact):
        for axis in (0, 1):
            if source == "moments":
                ref = exact.moments(X, Y, t)[k][..., 1 + axis]
                est = getattr(state, name)[..., 1 + axis]
            elif source == "fd3":
                shift = (0.5 * state.dx, 0.0) if axis == 0 else (0.0, 0.5 * state.dx)
                ref = exact.moments(X + shift[0], Y + shift[1], t)[k][..., 1 + axis]
                est = fdtd_derivatives_fd3(num, state.dx, axis)
            else:
                raise ValueError(f"unknown derivative source {source!r}")
            diff = np.abs(est - ref)
            scale = np.abs(ref)
            if mode not in ("normwise", "pointwise"):
                raise ValueError(f"unknown eps2 mode {mode!r}")
            if scale.max() == 0:
                continue
            if mode == "normwise":
                worst = max(worst, float(diff.max() / scale.max()))
            elif mode == "pointwise":
                keep = scale >= tau * scale.max()
                worst = max(worst, float(np.max(diff[keep] / scale[keep])))
    return worst


@dataclass(frozen=True)
class ErrorReport:
    scheme: str
    lam: float
    sigma_inv2: float
    N: int
    T: float
    steps: int
    eps1: float
    eps2: float


@dataclass
class ConvergenceTable:
    reports: list = field(default_factory=list)

    @staticmethod
    def _order(prev, cur, key):
        a, b = getattr(prev, key), getattr(cur, key)
        if a <= 0 or b <= 0:
            return float("nan")
        return math.log(a / b) / math.log(cur.N / prev.N)

    def rows(self):
        """``(N, eps1, order1, eps2, order2)`` with ``None`` orders on the first row."""
        out = []
        for i, r in enumerate(self.reports):
            if i == 0:
                o1 = o2 = None
            else:
                o1 = self._order(self.reports[i - 1], r, "eps1")
                o2 = self._order(self.reports[i - 1], r, "eps2")
            out.append((r.N, r.eps1, o1, r.eps2, o2))
        return out

    def orders(self, key="eps1"):
        return [self._order(a, b, key) for a, b in zip(self.reports, self.reports[1:])]

    def eps(self, key="eps1"):
        return [getattr(r, key) for r in self.reports]


def default_steps(lam, N, T=1.0):
    """Step count for a run to ``T`` on ``dx = 1/N`` with ``dt = lam*dx``.

    ``lam = 1/sqrt(2)`` with ``T = 1`` uses ``round(1.4 N)`` steps (final time
    ``1.4/sqrt(2)``) so the reported errors correspond to the published runs.
    """
    if abs(lam - 1 / math.sqrt(2)) < 1e-12 and T == 1.0:
        return round(1.4 * N)
    return round(T * N / lam)


def run_plane_wave(scheme, lam, N, spec, steps=None, init="exact", T=1.0):
    """Single plane-wave run; returns ``(final_state, ErrorReport)``."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    dx = 1.0 / N
    steps = default_steps(lam, N, T) if steps is None else steps
    if scheme == "multimoment":
        if init == "exact":
            state = init_from_closures(N, dx, 1.0, 1.0, plane_wave_fields(spec, 0.0),
                                       origin=PLANE_WAVE_ORIGIN)
        elif init == "fd":
            X, Y = _grid(N, dx)
            vals = dict(zip(FIELDS, spec.values(X, Y, 0.0)))
            state = init_derivatives_by_fd(vals, dx, origin=PLANE_WAVE_ORIGIN)
        else:
            raise ValueError(f"unknown init mode {init!r}")
        state = run_multimoment(state, lam, steps)
    elif scheme == "bilinear":
        X, Y = _grid(N, dx)
        h, ex, ey = spec.values(X, Y, 0.0)
        state = BilinearState(N, dx, h, ex, ey, origin=PLANE_WAVE_ORIGIN)
        for _ in range(steps):
            state = step_bilinear(state, lam)
    else:
        state = yee_init_exact(N, dx, lam * dx, spec.values, origin=PLANE_WAVE_ORIGIN)
        state = run_fdtd4(state, steps)
    report = ErrorReport(scheme, lam, spec.sigma_inv2, N, state.t, steps,
                         error_eps1(state, spec), error_eps2(state, spec))
    return state, report


def _grid(N, dx, origin=PLANE_WAVE_ORIGIN):
    x = origin[0] + np.arange(N) * dx
    y = origin[1] + np.arange(N) * dx
    return np.meshgrid(x, y, indexing="ij")


def convergence_study(scheme, lam, sigma_inv2, N_list, T=1.0, init="exact", modes=(0, 1, 2, 3)):
    """Run the plane-wave problem for each ``N`` and collect a :class:`ConvergenceTable`."""
    N_list = list(N_list)
    if N_list != sorted(N_list):
        raise ValueError("N_list must be ascending")
    spec = PlaneWaveSpec(sigma_inv2, tuple(modes))
    table = ConvergenceTable()
    for N in N_list:
        _, rep = run_plane_wave(scheme, lam, N, spec, init=init, T=T)
        table.reports.append(rep)
    return table


# -- sharp profile ---------------------------------------------------------------

def run_sharp_profile(dx=0.01, lam=1.0, T_list=(0.15, 0.25)):
    """Evolve the square indicator and snapshot ``h`` values at the requested times.

    Returns ``{T: {"h": (n, n) array, "overshoot": float, "undershoot": float,
    "state": FieldState}}`` including ``T = 0``.
    """
    n = round(1.0 / dx)
    state = init_sharp_square(n, dx)
    dt = lam * dx
    out = {0.0: _snapshot(state)}
    done = 0
    for T in sorted(T_list):
        target = round(T / dt)
        if target > done:
            state = run_multimoment(state, lam, target - done)
            done = target
        out[T] = _snapshot(state)
    return out


def _snapshot(state):
    h = state.h[..., 0].copy()
    return {"h": h, "overshoot": float(h.max() - 1.0), "undershoot": float(-h.min()),
            "state": state}


# -- hidden resolution / bi-cubic export -------------------------------------------

HIDDEN_RESOLUTION_WIDTH2 = 1000.0


def init_hidden_resolution(n=40, width2=HIDDEN_RESOLUTION_WIDTH2):
    """``H = exp(-x**2 / width2)`` on ``[-1/2, 1/2)^2`` with exact moments, ``E = 0``."""
    dx = 1.0 / n

    def h(X, Y):
        f = np.exp(-X**2 / width2)
        z = np.zeros_like(f)
        return np.stack([f, -2 * X / width2 * f, z, z], axis=-1)

    return init_from_closures(n, dx, 1.0, 1.0, {"h": h}, origin=PLANE_WAVE_ORIGIN)


def run_hidden_resolution(n=40, steps=10, lam=1.0, width2=HIDDEN_RESOLUTION_WIDTH2):
    return run_multimoment(init_hidden_resolution(n, width2), lam, steps)


def cell_coefficients(moments, dx):
    """Unit-cell bi-cubic coefficients for every cell: shape (n, n, 16).

    Cell ``(i, j)`` spans nodes ``(i, j)`` to ``(i+1, j+1)`` with periodic wrap.
    """
    corners = [np.roll(moments, (-ci, -cj), axis=(0, 1)) for ci, cj in poly.CORNERS]
    data = np.concatenate(corners, axis=-1)
    QR = poly.interpolation_matrix() @ poly.scaling_matrix(poly.CellGeometry(dx, dx))
    return data @ QR.T


def export_bicubic(state, samples=8, field_name="h"):
    """Sample the piecewise bi-cubic reconstruction of a field on every cell.

    Each cell is sampled on a ``samples x samples`` lattice including both
    end points, so shared edges appear twice.  Returns a dict with ``x``,
    ``y``, ``value`` and ``dx_value`` arrays of shape ``(n*s, n*s)``.
    """
    if samples < 2:
        raise ValueError("samples must be at least 2")
    s = samples
    n, dx = state.n, state.dx
    q = cell_coefficients(getattr(state, field_name), dx)
    u = np.linspace(0.0, 1.0, s)
    U, V = np.meshgrid(u, u, indexing="ij")
    E = np.stack([poly.basis_row((a, b)) for a, b in zip(U.ravel(), V.ravel())]).reshape(s, s, 16)
    DxE = np.stack([poly.basis_row((a, b)) @ poly.tensor4(poly.D, poly.I4)
                    for a, b in zip(U.ravel(), V.ravel())]).reshape(s, s, 16)
    val = np.einsum("ijq,abq->iajb", q, E).reshape(n * s, n * s)
    dval = np.einsum("ijq,abq->iajb", q, DxE).reshape(n * s, n * s) / dx
    xc = state.origin[0] + (np.arange(n)[:, None] + u[None, :]) * dx
    yc = state.origin[1] + (np.arange(n)[:, None] + u[None, :]) * dx
    X, Y = np.meshgrid(xc.ravel(), yc.ravel(), indexing="ij")
    return {"x": X, "y": Y, "value": val, "dx_value": dval}


def export_bilinear(values, samples=8):
    """Piecewise bilinear interpolation of nodal ``values`` on the same lattice as
    :func:`export_bicubic`."""
    n = values.shape[0]
    u = np.linspace(0.0, 1.0, samples)
    f00 = values
    f10 = np.roll(values, -1, 0)
    f11 = np.roll(values, (-1, -1), (0, 1))
    f01 = np.roll(values, -1, 1)
    U = u[:, None]
    V = u[None, :]
    out = (f00[:, None, :, None] * ((1 - U) * (1 - V))[None, :, None, :]
           + f10[:, None, :, None] * (U * (1 - V))[None, :, None, :]
           + f11[:, None, :, None] * (U * V)[None, :, None, :]
           + f01[:, None, :, None] * ((1 - U) * V)[None, :, None, :])
    return out.reshape(n * samples, n * samples)


def total_variation(surface):
    return float(np.abs(np.diff(surface, axis=0)).sum() + np.abs(np.diff(surface, axis=1)).sum())


# -- operation count ---------------------------------------------------------------

def op_count_report(n, steps, lam=1.0):
    """FMA count of the multi-moment update from the stencil nonzero structure."""
    st = uniform_stencils(lam)
    probe = FieldState(3, 1.0, np.zeros((3, 3, 4)), np.zeros((3, 3, 4)), np.zeros((3, 3, 4)))
    _, per_node = step_multimoment_counted(probe, st, lam)
    nnz = {fam: int(st.nonzero_mask(fam).sum()) for fam in ("advect", "dx", "dy")}
    return {
        "per_node": per_node,
        "h": nnz["advect"] + nnz["dx"] + nnz["dy"],
        "ex": nnz["dy"] + nnz["advect"],
        "ey": nnz["dx"] + nnz["advect"],
        "nonzeros": {"a": nnz["advect"], "b": nnz["dx"], "c": nnz["dy"]},
        "total": per_node * n * n * steps,
    }


# -- output ---------------------------------------------------------------------------

def fmt(x):
    if x is None:
        return ""
    return repr(float(x)) if not isinstance(x, (int, np.integer)) else str(int(x))


def write_convergence_csv(path, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "lambda", "sigma_inv2", "N", "eps1", "order1", "eps2", "order2"])
        for rep, (N, e1, o1, e2, o2) in zip(table.reports, table.rows()):
            w.writerow([rep.scheme, fmt(rep.lam), fmt(rep.sigma_inv2), N,
                        fmt(e1), fmt(o1), fmt(e2), fmt(o2)])


def write_surface_csv(path, x, y, value, header=("x", "y", "value")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for a, b, v in zip(np.ravel(x), np.ravel(y), np.ravel(value)):
            w.writerow([fmt(a), fmt(b), fmt(v)])


def version_string():
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=5, cwd=__file__.rsplit("/", 1)[0])
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_manifest(path, command, config):
    with open(path, "w") as fh:
        json.dump({"command": command, "config": config, "version": version_string()},
                  fh, indent=2, sort_keys=True)
