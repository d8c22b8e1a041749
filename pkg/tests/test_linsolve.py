import numpy as np
import pytest
import scipy.sparse as sp

from boussleray.fem import FeSpace, assemble_div, assemble_mass, assemble_stiffness
from boussleray.linsolve import (
    Factorization,
    Recycler,
    SaddleFactorization,
    SolveError,
    solve_general,
    solve_saddle,
    solve_spd,
)
from boussleray.mesh import build_rect_mesh
from oracles import dense_saddle

BACKENDS = ["direct", "iterative", "recycle"]


@pytest.fixture
def laplace_system(rng):
    V = FeSpace(build_rect_mesh((0, 1), (0, 1), 4, 4), 2)
    A = (assemble_stiffness(V) + assemble_mass(V)).tocsr()
    return A, rng.standard_normal(V.ndofs)


@pytest.mark.parametrize("backend", ["direct", "iterative"])
def test_spd(laplace_system, backend):
    A, b = laplace_system
    x, rep = solve_spd(A, b, 1e-10, backend)
    assert np.allclose(x, np.linalg.solve(A.toarray(), b))
    assert rep.residual_norm <= 1e-10
    assert rep.as_dict()["backend"] == backend


@pytest.mark.parametrize("backend", BACKENDS)
def test_general(laplace_system, backend, rng):
    A, b = laplace_system
    n = A.shape[0]
    S = sp.random(n, n, density=0.02, random_state=3)
    A = (A + 0.1 * (S - S.T)).tocsr()
    x, _ = solve_general(A, b, 1e-10, backend)
    assert np.allclose(x, np.linalg.solve(A.toarray(), b))


def test_zero_rhs(laplace_system):
    A, b = laplace_system
    x, _ = solve_spd(A, 0 * b)
    assert not np.any(x)


def test_not_spd_is_reported(laplace_system):
    A, _ = laplace_system
    with pytest.raises(SolveError):
        Factorization(-A, spd=True)
    S = A.tolil()
    S[0, 1] += 1.0
    with pytest.raises(SolveError):
        Factorization(S.tocsr(), spd=True)


def test_singular_is_reported():
    A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SolveError):
        solve_general(A, np.array([1.0, 0.0]))


def test_unknown_backend(laplace_system):
    A, b = laplace_system
    with pytest.raises(ValueError):
        solve_general(A, b, backend="magic")


def test_factorization_reuse(laplace_system, rng):
    A, b = laplace_system
    fac = Factorization(A, spd=True)
    for _ in range(3):
        b = rng.standard_normal(A.shape[0])
        x, rep = fac.solve(b)
        assert rep.residual_norm < 1e-10


def test_recycler_reuses_factorization(laplace_system):
    A, b = laplace_system
    rec = Recycler()
    solve_general(A, b, backend="recycle", recycler=rec)
    for eps in (1e-3, 2e-3, 3e-3):
        x, rep = solve_general(A * (1 + eps), b, backend="recycle", recycler=rec)
        assert np.allclose(x, np.linalg.solve((A * (1 + eps)).toarray(), b))
    assert rec.factorizations == 1


@pytest.fixture
def stokes():
    mesh = build_rect_mesh((0, 1), (0, 1), 3, 3)
    V, Q = FeSpace(mesh, 2), FeSpace(mesh, 1)
    K = assemble_stiffness(V) + assemble_mass(V)
    F = sp.block_diag([K, K], format="csr")
    B = -assemble_div(V, Q)
    fixed = np.concatenate([V.boundary_dofs, V.boundary_dofs + V.ndofs])
    w = assemble_mass(Q) @ np.ones(Q.ndofs)
    return F, B, fixed, w, V


@pytest.mark.parametrize("backend", BACKENDS)
def test_saddle_vs_dense(stokes, backend, rng):
    F, B, fixed, w, V = stokes
    f = rng.standard_normal(F.shape[0])
    u, p, rep = solve_saddle(F, B, f, None, 1e-10, fixed, 0.0, w, backend)
    ud, pd = dense_saddle(F.toarray(), B.toarray(), f, fixed, 0.0, w)
    assert np.allclose(u, ud, atol=1e-10) and np.allclose(p, pd, atol=1e-9)
    assert abs(w @ p) < 1e-12
    assert np.max(np.abs(B @ u)) < 1e-10


def test_saddle_factorization_matches(stokes, rng):
    F, B, fixed, w, V = stokes
    fac = SaddleFactorization(F, B, fixed, w)
    for _ in range(2):
        f = rng.standard_normal(F.shape[0])
        vals = rng.standard_normal(len(fixed)) * 0.0
        u1, p1, _ = fac.solve(f, None, vals)
        u2, p2, _ = solve_saddle(F, B, f, None, 1e-10, fixed, vals, w)
        assert np.allclose(u1, u2) and np.allclose(p1, p2)


def test_saddle_without_normalization(stokes, rng):
    # the pressure level is then arbitrary; the velocity must not be
    F, B, fixed, w, V = stokes
    f = rng.standard_normal(F.shape[0])
    u_ref, _, _ = solve_saddle(F, B, f, None, 1e-10, fixed, 0.0, w)
    try:
        u, p, _ = solve_saddle(F, B, f, None, 1e-10, fixed, 0.0, None)
    except SolveError:
        return
    assert np.allclose(u, u_ref, atol=1e-8)
