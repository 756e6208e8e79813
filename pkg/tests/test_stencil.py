import numpy as np
import pytest

from multimoment.scheme import FieldState, step_multimoment, update_matrix
from multimoment.stencil import (FAMILIES, NEIGHBOR_OFFSETS, StencilGeometry, assemble_A,
                                 assemble_stencils, uniform_stencils)

from oracles import QUADRANT_CELLS, hermite_patch, oracle_step, smooth_periodic_moments, \
    spherical_mean_update

LAMBDAS = [0.25, 0.5, 0.7, 1.0]


@pytest.mark.parametrize("lam", LAMBDAS)
def test_hundred_nonzeros_per_family(lam):
    s = uniform_stencils(lam)
    for fam in FAMILIES:
        assert s.nonzero_mask(fam).sum() == 100


@pytest.mark.parametrize("lam", LAMBDAS)
def test_row_sums_on_constants(lam):
    s = uniform_stencils(lam)
    e0 = np.array([1.0, 0, 0, 0])
    assert np.allclose(s.a.sum(0) @ e0, e0, atol=1e-14)
    assert np.allclose(s.b.sum(0) @ e0, 0, atol=1e-14)
    assert np.allclose(s.c.sum(0) @ e0, 0, atol=1e-14)


def test_assemble_A_shapes():
    A = assemble_A(StencilGeometry.uniform(1.0, 0.5), "dx")
    assert sorted(A) == [1, 2, 3, 4]
    assert all(m.shape == (4, 16) for m in A.values())
    with pytest.raises(ValueError):
        assemble_A(StencilGeometry.uniform(1.0, 0.5), "curl")


def test_x_reflection_symmetry():
    # mirroring x swaps neighbours di -> -di and flips the sign of odd x-moments
    s = uniform_stencils(0.6)
    flip = np.diag([1.0, -1, 1, -1])
    mirror = [NEIGHBOR_OFFSETS.index((-di, dj)) for di, dj in NEIGHBOR_OFFSETS]
    for k in range(9):
        assert np.allclose(flip @ s.a[mirror[k]] @ flip, s.a[k], atol=1e-14)
        assert np.allclose(flip @ s.b[mirror[k]] @ flip, -s.b[k], atol=1e-14)
        assert np.allclose(flip @ s.c[mirror[k]] @ flip, s.c[k], atol=1e-14)


def test_xy_transpose_symmetry():
    s = uniform_stencils(0.8)
    swap = np.eye(4)[[0, 2, 1, 3]]
    tr = [NEIGHBOR_OFFSETS.index((dj, di)) for di, dj in NEIGHBOR_OFFSETS]
    for k in range(9):
        assert np.allclose(swap @ s.a[tr[k]] @ swap, s.a[k], atol=1e-14)
        assert np.allclose(swap @ s.b[tr[k]] @ swap, s.c[k], atol=1e-14)


@pytest.mark.parametrize("lam", [0.25, 0.7, 1.0])
def test_step_matches_dense_oracle(lam):
    rng = np.random.default_rng(11)
    n = 16
    dx = 1.0 / n
    h, ex, ey = (smooth_periodic_moments(n, rng) for _ in range(3))
    state = FieldState(n, dx, h, ex, ey)
    new = step_multimoment(state, uniform_stencils(lam, dx), lam * dx)
    ref = oracle_step(h, ex, ey, dx, lam * dx)
    for got, want in zip((new.h, new.ex, new.ey), ref):
        scale = np.abs(want).max(axis=(0, 1))
        assert np.all(np.abs(got - want).max(axis=(0, 1)) <= 1e-10 * scale)


def test_nonuniform_geometry_matches_oracle():
    rng = np.random.default_rng(5)
    g = StencilGeometry(0.3, 0.2, 0.25, 0.35, 0.15, c=1.2)
    eps, mu = 1 / 1.2, 1 / 1.2
    s = assemble_stencils(g)
    vals = {f: rng.normal(size=(9, 4)) for f in ("h", "ex", "ey")}
    got = update_matrix(s, eps, mu) @ np.concatenate([vals[f].ravel() for f in ("h", "ex", "ey")])
    xs = {-1: -g.d1_left, 0: 0.0, 1: g.d1_right}
    ys = {-1: -g.d2_down, 0: 0.0, 1: g.d2_up}
    patches = {}
    for q, (a0, a1, b0, b1) in QUADRANT_CELLS.items():
        patches[q] = {f: hermite_patch([((xs[di], ys[dj]), vals[f][NEIGHBOR_OFFSETS.index((di, dj))])
                                        for di in (a0, a1) for dj in (b0, b1)])
                      for f in vals}
    want = spherical_mean_update(patches, g.c * g.dt, g.dt, eps, mu)
    assert np.allclose(got, np.concatenate([want[f] for f in ("h", "ex", "ey")]), atol=1e-12)


def test_geometry_validation():
    with pytest.raises(ValueError):
        StencilGeometry.uniform(0.1, 0.2)
    with pytest.raises(ValueError):
        StencilGeometry(0.1, 0.0, 0.1, 0.1, 0.05)
    with pytest.raises(ValueError):
        StencilGeometry.uniform(0.1, -0.05)
    # diagnostics may go past the limit explicitly
    assert StencilGeometry.uniform(0.1, 0.12, enforce_cfl=False).dt == 0.12
    with pytest.raises(TypeError):
        assemble_stencils("not a geometry")


def test_cached_blocks_are_read_only():
    s = uniform_stencils(0.5)
    assert uniform_stencils(0.5) is s
    with pytest.raises(ValueError):
        s.a[0, 0, 0] = 1.0
