"""Assembly of the bilinear and trilinear forms into CSR matrices.

Every (row space, column space) pair gets a sparsity pattern computed once,
together with a map from local element entries to CSR value slots. Re-assembly
with new coefficients (convection winds, indicator weights) is then a single
element kernel call plus a scatter-add.
"""

from __future__ import annotations

import weakref

import numpy as np
import scipy.sparse as sp

from .. import _kernels as kern
from ..mesh import MARKERS
from .elements import shape_values
from .space import FeSpace, Field, SpaceMismatch


class AssemblyError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


class _Pattern:
    def __init__(self, row_dofs, col_dofs, nrows, ncols):
        nt, nr = row_dofs.shape
        nc = col_dofs.shape[1]
        rows = np.broadcast_to(row_dofs[:, :, None], (nt, nr, nc))
        cols = np.broadcast_to(col_dofs[:, None, :], (nt, nr, nc))
        keys = rows.astype(np.int64) * ncols + cols
        uniq, inverse = np.unique(keys.ravel(), return_inverse=True)
        r = uniq // ncols
        self.indices = (uniq % ncols).astype(np.int32)
        self.indptr = np.searchsorted(r, np.arange(nrows + 1)).astype(np.int32)
        self.index = inverse.reshape(nt, nr, nc).astype(np.int64)
        self.nnz = len(uniq)
        self.shape = (nrows, ncols)

    def build(self, local: np.ndarray) -> sp.csr_matrix:
        data = kern.scatter_add(self.index, local, self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=self.shape)


_patterns: "weakref.WeakKeyDictionary[FeSpace, dict]" = weakref.WeakKeyDictionary()


def _pattern(rows: FeSpace, cols: FeSpace) -> _Pattern:
    cache = _patterns.setdefault(rows, weakref.WeakKeyDictionary())
    if cols not in cache:
        cache[cols] = _Pattern(rows.elem_dofs, cols.elem_dofs, rows.ndofs, cols.ndofs)
    return cache[cols]


def _check_mesh(a: FeSpace, b: FeSpace):
    if not a.same_mesh(b):
        raise SpaceMismatch("spaces live on different meshes")


def assemble_mass(space: FeSpace) -> sp.csr_matrix:
    phi, _, wdet = space.tabulate()
    return _pattern(space, space).build(kern.element_mass(phi, wdet))


def assemble_stiffness(space: FeSpace, coefficient=None) -> sp.csr_matrix:
    """``K_ij = int c grad(phi_i) . grad(phi_j)``.

    ``coefficient`` holds samples at the space's quadrature points, shape
    (nt, nq); ``None`` means c = 1.
    """
    _, grads, wdet = space.tabulate()
    if coefficient is not None:
        c = np.asarray(coefficient, dtype=float)
        if c.shape != wdet.shape:
            raise AssemblyError(f"coefficient shape {c.shape} != quadrature layout {wdet.shape}")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise AssemblyError("stiffness coefficient must be finite and nonnegative")
        wdet = np.ascontiguousarray(wdet * c)
    return _pattern(space, space).build(kern.element_stiffness(grads, wdet))


def wind_at_quadrature(space: FeSpace, wind: Field) -> np.ndarray:
    if wind.components != 2:
        raise SpaceMismatch("wind must be a 2-component field")
    _check_mesh(space, wind.space)
    if wind.space is space:
        vals = wind.at_quadrature()
    else:
        vals = wind.at_quadrature(space.quadrature)
    return np.ascontiguousarray(vals)


def assemble_skew_convection_scalar(space: FeSpace, wind: Field) -> sp.csr_matrix:
    """Matrix of ``c(w, theta, psi) = 1/2 [(w.grad theta, psi) - (w.grad psi, theta)]``.

    Row index is the test function psi, column index the trial theta.
    """
    phi, grads, wdet = space.tabulate()
    w = wind_at_quadrature(space, wind)
    return _pattern(space, space).build(kern.element_convection(phi, grads, w, wdet))


def assemble_skew_convection_vector(space_vel: FeSpace, wind: Field) -> sp.csr_matrix:
    """Blockwise matrix of ``b(w, v, z)`` acting on stacked velocity components."""
    C = assemble_skew_convection_scalar(space_vel, wind)
    return sp.block_diag([C, C], format="csr")


def assemble_div(space_vel: FeSpace, space_pres: FeSpace) -> sp.csr_matrix:
    """``D`` with ``(D u) . q = (div u, q)``; columns are stacked components."""
    _check_mesh(space_vel, space_pres)
    if space_vel.degree < space_pres.degree + 1:
        raise ConfigurationError(
            f"unstable pairing P{space_vel.degree}/P{space_pres.degree}: "
            "velocity degree must exceed pressure degree"
        )
    rule = space_vel.quadrature
    _, grads, wdet = space_vel.tabulate()
    phi_p = np.ascontiguousarray(shape_values(space_pres.degree, rule.xy))
    local = kern.element_mixed(phi_p, grads, wdet)
    pat = _pattern(space_pres, space_vel)
    Dx = pat.build(np.ascontiguousarray(local[..., 0]))
    Dy = pat.build(np.ascontiguousarray(local[..., 1]))
    return sp.hstack([Dx, Dy], format="csr")


def _sample(space: FeSpace, f, t, components):
    xq = space.quadrature_points()
    vals = f(xq[..., 0], xq[..., 1], t)
    if components == 1:
        vals = [vals]
    out = [np.broadcast_to(np.asarray(v, dtype=float), xq.shape[:2]) for v in vals]
    if len(out) != components:
        raise AssemblyError(f"expected {components} components from f, got {len(out)}")
    for v in out:
        if not np.all(np.isfinite(v)):
            raise AssemblyError("non-finite load sample")
    return out


def assemble_load(space: FeSpace, f, t: float = 0.0, components: int = 1) -> np.ndarray:
    """``L_i = int f(x, t) phi_i``; vector loads are stacked by component.

    ``f(x, y, t)`` receives arrays; a vector ``f`` returns a tuple.
    """
    phi, _, wdet = space.tabulate()
    parts = []
    for v in _sample(space, f, t, components):
        local = kern.element_load(phi, np.ascontiguousarray(v), wdet)
        parts.append(kern.scatter_add(space.elem_dofs, local, space.ndofs))
    return np.concatenate(parts)


def l2_norm_squared_of_function(space: FeSpace, f, t: float = 0.0, components: int = 1) -> float:
    _, _, wdet = space.tabulate()
    return float(sum(np.sum(wdet * v**2) for v in _sample(space, f, t, components)))


def constrain(mat, rhs, dofs, values):
    """Identity rows and column elimination for fixed ``dofs``."""
    mat = sp.csr_matrix(mat)
    n = mat.shape[0]
    rhs = np.array(rhs, dtype=float)
    g = np.zeros(n)
    g[dofs] = values
    rhs -= mat @ g
    keep = np.ones(n)
    keep[dofs] = 0.0
    P = sp.diags(keep)
    out = (P @ mat @ P).tocsr()
    out = out + sp.diags(1.0 - keep)
    out = sp.csr_matrix(out)
    out.eliminate_zeros()
    out.sort_indices()
    rhs[dofs] = values
    return out, rhs


def boundary_dofs(space: FeSpace, markers=MARKERS, components: int = 1) -> np.ndarray:
    by = space.boundary_dofs_by_marker
    base = np.unique(np.concatenate([by[m] for m in markers]))
    return np.concatenate([base + c * space.ndofs for c in range(components)])


def boundary_values(space: FeSpace, g, t: float = 0.0, markers=MARKERS, components: int = 1):
    """Dofs on ``markers`` and the nodal values of ``g(x, y, t)`` there."""
    by = space.boundary_dofs_by_marker
    base = np.unique(np.concatenate([by[m] for m in markers]))
    xy = space.dof_coords[base]
    vals = g(xy[:, 0], xy[:, 1], t)
    if components == 1:
        vals = [vals]
    dofs = np.concatenate([base + c * space.ndofs for c in range(components)])
    values = np.concatenate([np.broadcast_to(np.asarray(v, float), base.shape) for v in vals])
    return dofs, values


def apply_dirichlet(mat, rhs, space: FeSpace, boundary_values_fn, t: float = 0.0,
                    markers=MARKERS, components: int = 1):
    """Impose ``u = g`` on the marked boundary by row/column elimination."""
    dofs, values = boundary_values(space, boundary_values_fn, t, markers, components)
    return constrain(mat, rhs, dofs, values)


def evaluate_field(field: Field, points) -> np.ndarray:
    """Exact polynomial evaluation at physical points.

    Returns shape (npts,) for scalar fields and (npts, components) otherwise.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    space = field.space
    tri, lam = space.mesh.locate(points)
    phi = shape_values(space.degree, lam[:, 1:])  # (npts, nl)
    loc = field.blocks()[:, space.elem_dofs[tri]]  # (c, npts, nl)
    vals = np.einsum("pn,cpn->pc", phi, loc)
    return vals[:, 0] if field.components == 1 else vals
