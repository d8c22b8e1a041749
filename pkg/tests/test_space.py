import numpy as np
import pytest

from boussleray.fem import FeSpace, Field, SpaceMismatch
from boussleray.mesh import build_rect_mesh


@pytest.mark.parametrize("k,expected", [(1, 4), (2, 9), (3, 16)])
def test_dof_counts_two_triangles(two_triangles, k, expected):
    assert FeSpace(two_triangles, k).ndofs == expected


@pytest.mark.parametrize("role,shape,counts", [
    ("coarse", (80, 40), (26082, 3321, 13041)),
    ("fine", (240, 70), (135642, 17111, 67821)),
])
def test_lock_exchange_dof_counts(role, shape, counts):
    m = build_rect_mesh((0.0, 8.0), (0.0, 1.0), *shape)
    V, Q = FeSpace(m, 2), FeSpace(m, 1)
    assert (2 * V.ndofs, Q.ndofs, V.ndofs) == counts


@pytest.mark.parametrize("k", [1, 2, 3])
def test_shared_dofs_have_one_coordinate(skewed_mesh, k):
    V = FeSpace(skewed_mesh, k)
    coords = V.dof_coords
    # no two dofs share a location, and every element node maps consistently
    assert len(np.unique(np.round(coords, 12), axis=0)) == V.ndofs
    assert V.elem_dofs.max() == V.ndofs - 1


@pytest.mark.parametrize("k", [1, 2, 3])
def test_polynomial_interpolation_exact(skewed_mesh, k, rng):
    V = FeSpace(skewed_mesh, k)
    c = rng.standard_normal((k + 1, k + 1))

    def poly(x, y):
        return sum(c[i, j] * x**i * y**j for i in range(k + 1) for j in range(k + 1 - i))

    f = V.interpolate(poly)
    xq = V.quadrature_points()
    assert np.allclose(f.at_quadrature(), poly(xq[..., 0], xq[..., 1]), atol=1e-11)


def test_boundary_dofs(small_mesh):
    V = FeSpace(small_mesh, 2)
    b = V.boundary_dofs
    x, y = V.dof_coords[b].T
    on = (np.isclose(x, 0) | np.isclose(x, 1) | np.isclose(y, 0) | np.isclose(y, 1))
    assert on.all()
    assert len(b) == 16
    assert len(V.boundary_dofs_by_marker["left"]) == 5


def test_field_checks(small_mesh):
    V = FeSpace(small_mesh, 2)
    with pytest.raises(SpaceMismatch):
        Field(V, np.zeros(3))
    with pytest.raises(FloatingPointError):
        Field(V, np.full(V.ndofs, np.nan))
    u = V.interpolate(lambda x, y: (x, 2 * y), 2)
    assert np.allclose((u + u).coeffs, 2 * u.coeffs)
    assert np.allclose((3.0 * u - u).coeffs, 2 * u.coeffs)
    assert u.blocks().shape == (2, V.ndofs)
    g = u.gradient_at_quadrature()
    assert np.allclose(g[..., 0, 0], 1.0) and np.allclose(g[..., 1, 1], 2.0)
    assert np.allclose(g[..., 0, 1], 0.0, atol=1e-13)


def test_bad_degree(small_mesh):
    with pytest.raises(ValueError):
        FeSpace(small_mesh, 4)
