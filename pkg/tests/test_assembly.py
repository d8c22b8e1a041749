import numpy as np
import pytest
import scipy.sparse as sp

from boussleray.fem import (
    AssemblyError,
    ConfigurationError,
    FeSpace,
    apply_dirichlet,
    assemble_div,
    assemble_load,
    assemble_mass,
    assemble_skew_convection_scalar,
    assemble_skew_convection_vector,
    assemble_stiffness,
    constrain,
    evaluate_field,
)
from boussleray.fem.assembly import l2_norm_squared_of_function
from boussleray.mesh import build_rect_mesh
from oracles import DenseOracle, dense_dirichlet

TOL = 1e-10


def _close(A, B):
    A = A.toarray() if sp.issparse(A) else A
    return np.max(np.abs(A - B)) <= TOL * max(1.0, np.max(np.abs(B)))


@pytest.fixture(params=["two_triangles", "skewed_mesh"])
def mesh(request):
    return request.getfixturevalue(request.param)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_mass_and_stiffness_vs_oracle(mesh, k):
    V = FeSpace(mesh, k)
    o = DenseOracle(V)
    assert _close(assemble_mass(V), o.mass())
    assert _close(assemble_stiffness(V), o.stiffness())


@pytest.mark.parametrize("k", [2, 3])
def test_weighted_stiffness_vs_oracle(mesh, k):
    V = FeSpace(mesh, k)
    o = DenseOracle(V)

    def c(x, y):
        return 1.0 + 0.5 * x - 0.25 * y

    xq = V.quadrature_points()
    K = assemble_stiffness(V, c(xq[..., 0], xq[..., 1]))
    assert _close(K, o.stiffness(c))


@pytest.mark.parametrize("k", [2, 3])
def test_convection_vs_oracle(mesh, k, rng):
    V = FeSpace(mesh, k)
    o = DenseOracle(V)
    w = V.zeros(2).with_coeffs(rng.standard_normal(2 * V.ndofs))
    N = o.convection(w.coeffs)
    assert _close(assemble_skew_convection_scalar(V, w), N)
    assert _close(assemble_skew_convection_vector(V, w), np.kron(np.eye(2), N))


@pytest.mark.parametrize("k", [2, 3])
def test_divergence_vs_oracle(mesh, k):
    V, Q = FeSpace(mesh, k), FeSpace(mesh, k - 1)
    assert _close(assemble_div(V, Q), DenseOracle(V).divergence(DenseOracle(Q)))


def test_load_vs_oracle(mesh):
    V = FeSpace(mesh, 2)

    def f(x, y, t=0.0):
        return x**2 * y - 3 * x * y + 1.0 + t

    # degree 3 load against P2: both rules are exact
    assert np.allclose(assemble_load(V, f, 0.5), DenseOracle(V).load(lambda x, y: f(x, y, 0.5)),
                       rtol=1e-12, atol=1e-14)


def test_smooth_load_quadrature_converges():
    def f(x, y, t=0.0):
        return np.sin(3 * x) * np.cos(2 * y)

    errs = []
    for n in (2, 4, 8):
        V = FeSpace(build_rect_mesh((0.0, 1.0), (0.0, 1.0), n, n), 2)
        errs.append(np.max(np.abs(assemble_load(V, f) - DenseOracle(V, n_quad=12).load(f))))
    # an order-5 rule on elements of area h^2 leaves an O(h^8) error per entry
    assert errs[0] / errs[1] > 2**5 and errs[1] / errs[2] > 2**5


def test_mass_sums_to_area(skewed_mesh):
    V = FeSpace(skewed_mesh, 3)
    assert assemble_mass(V).sum() == pytest.approx(2.0 * 0.75)


def test_stiffness_kernel_is_constants(skewed_mesh):
    V = FeSpace(skewed_mesh, 2)
    K = assemble_stiffness(V)
    assert np.allclose(K @ np.ones(V.ndofs), 0.0, atol=1e-12)
    assert abs(K - K.T).max() < 1e-14


def test_divergence_of_solenoidal_interpolant(small_mesh):
    V, Q = FeSpace(small_mesh, 2), FeSpace(small_mesh, 1)
    # stream function psi = x^2 y -> u = (x^2, -2xy), representable in P2
    u = V.interpolate(lambda x, y: (x**2, -2 * x * y), 2)
    assert np.allclose(assemble_div(V, Q) @ u.coeffs, 0.0, atol=1e-14)


def test_unstable_pairing_rejected(small_mesh):
    with pytest.raises(ConfigurationError):
        assemble_div(FeSpace(small_mesh, 2), FeSpace(small_mesh, 2))


def test_negative_weight_rejected(small_mesh):
    V = FeSpace(small_mesh, 2)
    c = np.ones(V.tabulate()[2].shape)
    c[0, 0] = -1.0
    with pytest.raises(AssemblyError):
        assemble_stiffness(V, c)


def test_constrain_matches_dense(small_mesh, rng):
    V = FeSpace(small_mesh, 2)
    A = assemble_stiffness(V) + assemble_mass(V)
    b = rng.standard_normal(V.ndofs)
    dofs = V.boundary_dofs
    vals = rng.standard_normal(len(dofs))
    As, bs = constrain(A, b, dofs, vals)
    Ad, bd = dense_dirichlet(A.toarray(), b, dofs, vals)
    assert np.allclose(As.toarray(), Ad) and np.allclose(bs, bd)
    x = np.linalg.solve(Ad, bd)
    assert np.allclose(x[dofs], vals)


def test_apply_dirichlet_reproduces_quadratic(small_mesh):
    # -Lap u = -4 with u = x^2 + y^2 on the boundary has the exact P2 solution
    V = FeSpace(small_mesh, 2)
    K = assemble_stiffness(V)
    b = assemble_load(V, lambda x, y, t: -4.0 + 0 * x)
    A, rhs = apply_dirichlet(K, b, V, lambda x, y, t: x**2 + y**2)
    x = np.linalg.solve(A.toarray(), rhs)
    ex = V.interpolate(lambda x, y: x**2 + y**2).coeffs
    assert np.allclose(x, ex, atol=1e-12)


def test_evaluate_field(skewed_mesh, rng):
    V = FeSpace(skewed_mesh, 3)
    f = V.interpolate(lambda x, y: x**3 - 2 * x * y**2 + 1, 1)
    pts = np.column_stack([rng.uniform(-0.5, 1.5, 30), rng.uniform(0.25, 1.0, 30)])
    assert np.allclose(evaluate_field(f, pts), pts[:, 0] ** 3 - 2 * pts[:, 0] * pts[:, 1] ** 2 + 1)
    u = V.interpolate(lambda x, y: (x, y), 2)
    assert np.allclose(evaluate_field(u, pts), pts)


def test_l2_norm_of_function(small_mesh):
    V = FeSpace(small_mesh, 2)
    assert l2_norm_squared_of_function(V, lambda x, y, t: 3.0 + 0 * x) == pytest.approx(9.0)
    assert l2_norm_squared_of_function(V, lambda x, y, t: (x, y), 0.0, 2) == pytest.approx(2 / 3)
