import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multimoment import poly

from oracles import hermite_patch


def monomial_moments(k, l, x, y):
    """(f, fx, fy, fxy) of x^k y^l."""
    def p(e, a, v):
        if a > e:
            return 0.0
        return (e if a else 1) * v ** (e - a)
    return np.array([p(k, ax, x) * p(l, ay, y) for ax, ay in poly.MOMENTS])


def corner_vector(fn, geom, x0=0.0, y0=0.0):
    return np.concatenate([fn(x0 + cx * geom.d1, y0 + cy * geom.d2) for cx, cy in poly.CORNERS])


def test_index_ordering():
    row = poly.basis_row((2.0, 3.0))
    for k in range(4):
        for l in range(4):
            assert row[poly.index(k, l)] == 2.0**k * 3.0**l


def test_interpolation_conditions_unit_cell():
    Q = poly.interpolation_matrix()
    # moments of each basis monomial at the four corners: R such that Q R = I
    R = np.array([corner_vector(lambda x, y, k=k, l=l: monomial_moments(k, l, x, y),
                                poly.CellGeometry(1, 1))
                  for k in range(4) for l in range(4)]).T
    assert np.allclose(Q @ R, np.eye(16), atol=1e-13)


def test_interpolation_matches_direct_solve():
    rng = np.random.default_rng(3)
    data = rng.normal(size=16)
    q = poly.bicubic_coeffs(data, poly.CellGeometry(1, 1))
    corners = [((cx, cy), data[4 * t:4 * t + 4]) for t, (cx, cy) in enumerate(poly.CORNERS)]
    C = hermite_patch(corners)
    assert np.allclose(q.reshape(4, 4), C, atol=1e-12)


@pytest.mark.parametrize("d1,d2", [(1.0, 1.0), (0.3, 0.7), (2.0, 0.05)])
def test_monomial_reproduction(d1, d2):
    geom = poly.CellGeometry(d1, d2)
    u = np.linspace(0.1, 0.9, 5)
    U, V = np.meshgrid(u, u, indexing="ij")
    for k in range(4):
        for l in range(4):
            fn = lambda x, y: monomial_moments(k, l, x, y)
            q = poly.bicubic_coeffs(corner_vector(fn, geom), geom)
            got = poly.evaluate(q, U, V)
            exact = (U * d1) ** k * (V * d2) ** l
            scale = max(1.0, np.abs(exact).max())
            assert np.abs(got - exact).max() <= 1e-12 * scale


def test_shift_and_dilation():
    rng = np.random.default_rng(0)
    c = rng.normal(size=4)
    for x in (-0.7, 0.2, 1.3):
        for s in (-1.0, 0.5):
            assert np.isclose(poly.cubic_row(x) @ poly.T_shift(s) @ c, poly.cubic_row(x - s) @ c)
        assert np.isclose(poly.cubic_row(x) @ poly.D_alpha(2.5) @ c, poly.cubic_row(2.5 * x) @ c)


def test_derivative_and_multiply_operators():
    c = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.allclose(poly.D @ c, [2, 6, 12, 0])
    # x * p'(x) keeps degree 3
    assert np.allclose(poly.M @ poly.D @ c, [0, 2, 6, 12])
    assert set(poly.op_matrices()) == {"D", "M", "D_alpha", "T_s"}


def test_tableau_advect_is_spherical_operator():
    rng = np.random.default_rng(1)
    q = rng.normal(size=16)
    tab = poly.operator_tableau()
    x, y = 0.3, -0.6
    e = poly.basis_row((x, y))
    C = q.reshape(4, 4)
    from numpy.polynomial import polynomial as P
    f = P.polyval2d(x, y, C)
    fx = P.polyval2d(x, y, P.polyder(C, 1, axis=0))
    fy = P.polyval2d(x, y, P.polyder(C, 1, axis=1))
    assert np.isclose(e @ tab[("advect", 0, 0)] @ q, f + x * fx + y * fy)
    assert np.isclose(e @ tab[("dx", 0, 0)] @ q, fx)
    assert np.isclose(e @ tab[("dy", 0, 0)] @ q, fy)
    fxy = P.polyval2d(x, y, P.polyder(P.polyder(C, 1, axis=0), 1, axis=1))
    assert np.isclose(e @ tab[("dx", 0, 1)] @ q, fxy)
    assert len(tab) == 12


def test_tableau_copies_are_independent():
    t = poly.operator_tableau()
    t[("dx", 0, 0)][:] = 0
    assert np.abs(poly.operator_tableau()[("dx", 0, 0)]).sum() > 0


def test_cell_geometry_rejects_bad_widths():
    with pytest.raises(ValueError):
        poly.CellGeometry(0.0, 1.0)
    with pytest.raises(ValueError):
        poly.CellGeometry(1.0, -2.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=16, max_size=16),
       st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_interpolant_honours_corner_moments(data, d1, d2):
    data = np.array(data)
    geom = poly.CellGeometry(d1, d2)
    q = poly.bicubic_coeffs(data, geom)
    for t, (cx, cy) in enumerate(poly.CORNERS):
        got = [poly.evaluate(q, cx, cy, ax, ay) / (d1**ax * d2**ay) for ax, ay in poly.MOMENTS]
        assert np.allclose(got, data[4 * t:4 * t + 4], atol=1e-9 * (1 + np.abs(data).max()) / min(d1, d2) ** 2)
