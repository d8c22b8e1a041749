"""Scalar Lagrange spaces and coefficient fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..mesh import MARKERS, TriMesh
from .elements import n_local, reference_nodes, shape_gradients, shape_values
from .quadrature import QuadratureRule, triangle_rule


class SpaceMismatch(ValueError):
    pass


class FeSpace:
    """Continuous P_k space on a triangle mesh, k in {1, 2, 3}.

    Global numbering: vertex dofs first (same index as the vertex), then
    ``k - 1`` dofs per edge ordered from the lower to the higher vertex
    index, then interior dofs.
    """

    def __init__(self, mesh: TriMesh, degree: int):
        if degree not in (1, 2, 3):
            raise ValueError(f"degree must be 1, 2 or 3, got {degree}")
        self.mesh = mesh
        self.degree = degree
        self.n_local = n_local(degree)
        self.elem_dofs, self.ndofs = self._number_dofs()
        self.elem_dofs.setflags(write=False)

    def _number_dofs(self):
        k = self.degree
        mesh = self.mesh
        t = mesh.triangles
        nv, ne, nt = mesh.n_vertices, len(mesh.edges), mesh.n_triangles
        cols = [t]
        if k > 1:
            per = k - 1
            for j in range(3):
                a, b = t[:, j], t[:, (j + 1) % 3]
                base = nv + per * mesh.triangle_edges[:, j]
                fwd = (a < b)[:, None]
                i = np.arange(per)[None, :]
                cols.append(base[:, None] + np.where(fwd, i, per - 1 - i))
        n_int = n_local(k) - 3 - 3 * (k - 1)
        if n_int:
            start = nv + (k - 1) * ne
            cols.append(start + np.arange(nt * n_int).reshape(nt, n_int))
        dofs = np.ascontiguousarray(np.hstack(cols), dtype=np.int64)
        ndofs = nv + (k - 1) * ne + n_int * nt
        return dofs, ndofs

    @property
    def quad_order(self) -> int:
        # exact for mass/stiffness products and for skew convection with
        # a wind of the same degree
        k = self.degree
        return max(2 * k + 1, 3 * k - 1)

    @cached_property
    def quadrature(self) -> QuadratureRule:
        return triangle_rule(self.quad_order)

    @cached_property
    def jacobians(self):
        p = self.mesh.vertices[self.mesh.triangles]
        J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # (nt, 2, 2)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        inv = np.empty_like(J)
        inv[:, 0, 0] = J[:, 1, 1] / det
        inv[:, 1, 1] = J[:, 0, 0] / det
        inv[:, 0, 1] = -J[:, 0, 1] / det
        inv[:, 1, 0] = -J[:, 1, 0] / det
        return J, det, inv

    @cached_property
    def dof_coords(self) -> np.ndarray:
        J, _, _ = self.jacobians
        ref = reference_nodes(self.degree)
        p0 = self.mesh.vertices[self.mesh.triangles[:, 0]]
        phys = p0[:, None, :] + np.einsum("eij,nj->eni", J, ref)
        coords = np.empty((self.ndofs, 2))
        coords[self.elem_dofs.ravel()] = phys.reshape(-1, 2)
        coords.setflags(write=False)
        return coords

    def tabulate(self, rule: QuadratureRule | None = None):
        """Basis data at quadrature points of every element.

        Returns ``(phi, grads, wdet)`` with shapes (nq, nl), (nt, nq, nl, 2)
        and (nt, nq). ``wdet`` folds the quadrature weight and element area.
        """
        if rule is None:
            return self._tabulated
        return self._tabulate(rule)

    @cached_property
    def _tabulated(self):
        return self._tabulate(self.quadrature)

    def _tabulate(self, rule):
        _, det, inv = self.jacobians
        phi = np.ascontiguousarray(shape_values(self.degree, rule.xy))
        dref = shape_gradients(self.degree, rule.xy)  # (nq, nl, 2)
        # physical gradient = J^{-T} grad_ref
        grads = np.ascontiguousarray(np.einsum("eji,qnj->eqni", inv, dref))
        wdet = np.ascontiguousarray(0.5 * np.abs(det)[:, None] * rule.weights[None, :])
        return phi, grads, wdet

    def quadrature_points(self, rule: QuadratureRule | None = None) -> np.ndarray:
        rule = rule or self.quadrature
        J, _, _ = self.jacobians
        p0 = self.mesh.vertices[self.mesh.triangles[:, 0]]
        return p0[:, None, :] + np.einsum("eij,qj->eqi", J, rule.xy)

    @cached_property
    def boundary_dofs_by_marker(self) -> dict[str, np.ndarray]:
        mesh = self.mesh
        k = self.degree
        out = {}
        for m, name in enumerate(MARKERS):
            sel = mesh.boundary_markers == m
            verts = mesh.boundary_edges[sel].ravel()
            parts = [verts]
            if k > 1:
                eids = mesh.boundary_edge_ids[sel]
                parts.append((mesh.n_vertices + (k - 1) * eids[:, None] + np.arange(k - 1)).ravel())
            out[name] = np.unique(np.concatenate(parts)).astype(np.int64)
        return out

    @cached_property
    def boundary_dofs(self) -> np.ndarray:
        return np.unique(np.concatenate(list(self.boundary_dofs_by_marker.values())))

    def interpolate(self, fn, components: int = 1) -> "Field":
        """Nodal interpolant of ``fn(x, y)``; vector functions return a tuple."""
        x, y = self.dof_coords[:, 0], self.dof_coords[:, 1]
        vals = fn(x, y)
        if components == 1:
            coeffs = np.broadcast_to(np.asarray(vals, dtype=float), (self.ndofs,)).copy()
        else:
            coeffs = np.concatenate(
                [np.broadcast_to(np.asarray(v, dtype=float), (self.ndofs,)) for v in vals]
            )
        return Field(self, coeffs, components)

    def zeros(self, components: int = 1) -> "Field":
        return Field(self, np.zeros(components * self.ndofs), components)

    def same_mesh(self, other: "FeSpace") -> bool:
        return self.mesh is other.mesh

    def __repr__(self):
        return f"FeSpace(P{self.degree}, ndofs={self.ndofs}, nt={self.mesh.n_triangles})"


@dataclass
class Field:
    """Coefficients on a scalar space; vector fields store components blockwise."""

    space: FeSpace
    coeffs: np.ndarray
    components: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.components * self.space.ndofs,):
            raise SpaceMismatch(
                f"coefficient length {self.coeffs.shape} does not match "
                f"{self.components} x {self.space.ndofs}"
            )
        if not np.all(np.isfinite(self.coeffs)):
            raise FloatingPointError("field has non-finite coefficients")

    def component(self, i: int) -> np.ndarray:
        n = self.space.ndofs
        return self.coeffs[i * n : (i + 1) * n]

    def blocks(self) -> np.ndarray:
        return self.coeffs.reshape(self.components, self.space.ndofs)

    def copy(self) -> "Field":
        return Field(self.space, self.coeffs.copy(), self.components, dict(self.meta))

    def with_coeffs(self, coeffs) -> "Field":
        return Field(self.space, coeffs, self.components)

    def at_quadrature(self, rule: QuadratureRule | None = None) -> np.ndarray:
        """Values at element quadrature points, shape (nt, nq) or (nt, nq, c)."""
        phi = self.space.tabulate(rule)[0] if rule is not None else self.space.tabulate()[0]
        loc = self.blocks()[:, self.space.elem_dofs]  # (c, nt, nl)
        vals = np.einsum("qn,cen->eqc", phi, loc)
        return vals[..., 0] if self.components == 1 else vals

    def gradient_at_quadrature(self, rule: QuadratureRule | None = None) -> np.ndarray:
        """Gradients at quadrature points, shape (nt, nq, 2) or (nt, nq, c, 2)."""
        grads = self.space.tabulate(rule)[1]
        loc = self.blocks()[:, self.space.elem_dofs]
        g = np.einsum("eqnd,cen->eqcd", grads, loc)
        return g[:, :, 0, :] if self.components == 1 else g

    def __add__(self, other):
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, a):
        return self.with_coeffs(a * self.coeffs)

    __rmul__ = __mul__
