"""Von Neumann stability analysis of the multi-moment scheme.

A Fourier mode ``f[i, j] = v * exp(1j * (theta1 * i + theta2 * j))`` is mapped
by the nine-block stencil to ``g(theta) @ v``; stacking ``h, ex, ey`` gives the
12x12 amplification matrix.
"""
from dataclasses import dataclass
import math

import numpy as np
import scipy.linalg

from .stencil import NEIGHBOR_OFFSETS, uniform_stencils

STABLE_TOL = 1e-9


class EigenSolverError(RuntimeError):
    pass


def _phases(theta1, theta2):
    theta1 = np.asarray(theta1, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    return np.stack([np.exp(1j * (di * theta1 + dj * theta2)) for di, dj in NEIGHBOR_OFFSETS], -1)


def symbol(blocks, theta1, theta2):
    """``g = sum_k exp(i (di_k theta1 + dj_k theta2)) m_k`` for blocks of shape (9, 4, 4).

    ``theta1``, ``theta2`` may be arrays; the result has shape ``theta.shape + (4, 4)``.
    """
    return np.einsum("...k,kab->...ab", _phases(theta1, theta2), np.asarray(blocks))


def amplification(lam, theta1, theta2, eps=1.0, mu=1.0):
    """12x12 amplification matrix (or a stack of them for array angles)."""
    if not 0 < lam:
        raise ValueError(f"CFL number must be positive, got {lam}")
    c = 1.0 / math.sqrt(eps * mu)
    # scans deliberately probe lam > 1
    s = uniform_stencils(lam, enforce_cfl=False)
    ga, gb, gc = (symbol(m, theta1, theta2) for m in (s.a, s.b, s.c))
    z = np.zeros_like(ga)
    km, ke = 1.0 / (c * mu), 1.0 / (c * eps)
    top = np.concatenate([ga, km * gc, -km * gb], -1)
    mid = np.concatenate([ke * gc, ga, z], -1)
    bot = np.concatenate([-ke * gb, z, ga], -1)
    return np.concatenate([top, mid, bot], -2)


def _schur_eigvals(M):
    try:
        T, Z = scipy.linalg.schur(M, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverError(f"eigenvalue iteration failed: {exc}") from exc
    berr = np.linalg.norm(M - Z @ T @ Z.conj().T) / max(np.linalg.norm(M), np.finfo(float).tiny)
    return np.diag(T), berr


def eigen_magnitudes(M, check=True):
    """Moduli of all eigenvalues of ``M`` (or of each matrix in a stack).

    Eigenvalues come from the complex Schur form ``M = Z T Z^H``.  With
    ``check`` the relative backward error ``|M - Z T Z^H| / |M|`` must not
    exceed 1e-10.
    """
    M = np.asarray(M, dtype=complex)
    flat = M.reshape(-1, *M.shape[-2:])
    out = np.empty(flat.shape[:2])
    for k, m in enumerate(flat):
        w, berr = _schur_eigvals(m)
        if check and berr > 1e-10:
            raise EigenSolverError(f"backward error {berr:.3g} exceeds 1e-10")
        out[k] = np.abs(w)
    return out.reshape(M.shape[:-1])


@dataclass(frozen=True)
class StabilityScan:
    lam: float
    theta1: np.ndarray
    theta2: np.ndarray
    max_mag: np.ndarray

    @property
    def global_max(self):
        return float(self.max_mag.max())

    def rows(self):
        """``(theta1, theta2, max |eig|)`` triples in row-major scan order."""
        T1, T2 = np.meshgrid(self.theta1, self.theta2, indexing="ij")
        return zip(T1.ravel(), T2.ravel(), self.max_mag.ravel())


def stability_scan(lam, grid_n=101, eps=1.0, mu=1.0):
    """Max eigenvalue modulus of the amplification matrix on ``[-pi, 0]^2``."""
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    th = np.linspace(-math.pi, 0.0, grid_n)
    T1, T2 = np.meshgrid(th, th, indexing="ij")
    Phi = amplification(lam, T1, T2, eps, mu)
    mags = eigen_magnitudes(Phi, check=True)
    return StabilityScan(lam, th, th.copy(), mags.max(-1))
