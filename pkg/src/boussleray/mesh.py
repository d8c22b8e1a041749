"""Structured triangular meshes of axis-aligned rectangles."""

from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

MARKERS = ("left", "right", "bottom", "top")


class MeshError(ValueError):
    pass


class TriMesh:
    """Conforming triangulation with marked boundary edges.

    Parameters
    ----------
    vertices : (nv, 2) array
    triangles : (nt, 3) int array, counterclockwise
    boundary_edges : (nb, 2) int array of vertex pairs
    boundary_markers : (nb,) int array indexing ``MARKERS``
    """

    def __init__(self, vertices, triangles, boundary_edges, boundary_markers):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int64)
        self.boundary_markers = np.ascontiguousarray(boundary_markers, dtype=np.int64)
        for arr in (self.vertices, self.triangles, self.boundary_edges, self.boundary_markers):
            arr.setflags(write=False)
        if np.any(self.signed_areas <= 0.0):
            raise MeshError("triangles must have positive signed area")
        # set by build_rect_mesh; carried through refinement for metadata
        self.grid_shape: tuple[int, int] | None = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def h_max(self) -> float:
        p = self.vertices[self.triangles]
        lens = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
        return float(lens.max())

    @cached_property
    def bounding_box(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])

    @cached_property
    def _edge_data(self):
        # local edge j of a triangle joins local vertices (j, j+1 mod 3)
        t = self.triangles
        pairs = np.stack([t, np.roll(t, -1, axis=1)], axis=2).reshape(-1, 2)
        keys = np.sort(pairs, axis=1)
        edges, inverse = np.unique(keys, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1, 3)

    @property
    def edges(self) -> np.ndarray:
        """Unique edges as sorted vertex pairs, shape (ne, 2)."""
        return self._edge_data[0]

    @property
    def triangle_edges(self) -> np.ndarray:
        """Global edge index of each local edge (j, j+1), shape (nt, 3)."""
        return self._edge_data[1]

    @cached_property
    def edge_triangle_count(self) -> np.ndarray:
        return np.bincount(self.triangle_edges.ravel(), minlength=len(self.edges))

    @cached_property
    def boundary_edge_ids(self) -> np.ndarray:
        """Global edge index of each boundary edge (aligned with ``boundary_edges``)."""
        lookup = {tuple(e): i for i, e in enumerate(self.edges.tolist())}
        keys = np.sort(self.boundary_edges, axis=1).tolist()
        return np.array([lookup[tuple(k)] for k in keys], dtype=np.int64)

    @cached_property
    def _centroid_tree(self) -> cKDTree:
        return cKDTree(self.vertices[self.triangles].mean(axis=1))

    def barycentric(self, tri: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Barycentric coordinates of ``points`` with respect to triangles ``tri``."""
        p = self.vertices[self.triangles[tri]]
        v0 = p[..., 0, :]
        d1 = p[..., 1, :] - v0
        d2 = p[..., 2, :] - v0
        r = points - v0
        det = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
        l1 = (r[..., 0] * d2[..., 1] - r[..., 1] * d2[..., 0]) / det
        l2 = (d1[..., 0] * r[..., 1] - d1[..., 1] * r[..., 0]) / det
        return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)

    def locate(self, points, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
        """Find the containing triangle of each point.

        Returns the triangle indices and the barycentric coordinates. Raises
        ``MeshError`` for points outside the mesh.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        k = min(12, self.n_triangles)
        _, cand = self._centroid_tree.query(points, k=k)
        cand = cand.reshape(len(points), k)
        lam = self.barycentric(cand, points[:, None, :])
        inside = lam.min(axis=2) >= -tol
        found = inside.any(axis=1)
        first = np.argmax(inside, axis=1)
        tri = cand[np.arange(len(points)), first]
        for i in np.flatnonzero(~found):
            lam_all = self.barycentric(np.arange(self.n_triangles), points[i][None, :])
            j = int(np.argmax(lam_all.min(axis=1)))
            if lam_all[j].min() < -tol:
                raise MeshError(f"point {points[i].tolist()} lies outside the mesh")
            tri[i] = j
        return tri, self.barycentric(tri, points)

    def marker_edges(self, marker: str) -> np.ndarray:
        return self.boundary_edges[self.boundary_markers == MARKERS.index(marker)]


def build_rect_mesh(x_range, y_range, nx: int, ny: int) -> TriMesh:
    """Structured mesh of ``2 * nx * ny`` triangles.

    Every cell is split along its lower-left to upper-right diagonal.
    """
    x0, x1 = map(float, x_range)
    y0, y1 = map(float, y_range)
    if nx < 1 or ny < 1:
        raise MeshError(f"need nx, ny >= 1, got nx={nx}, ny={ny}")
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate range x={x_range}, y={y_range}")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    a = j * (nx + 1) + i
    b = a + 1
    c = a + nx + 2
    d = a + nx + 1
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([a, b, c])
    triangles[1::2] = np.column_stack([a, c, d])

    def vid(ii, jj):
        return jj * (nx + 1) + ii

    ix = np.arange(nx)
    iy = np.arange(ny)
    edges = [
        np.column_stack([vid(0, iy), vid(0, iy + 1)]),
        np.column_stack([vid(nx, iy), vid(nx, iy + 1)]),
        np.column_stack([vid(ix, 0), vid(ix + 1, 0)]),
        np.column_stack([vid(ix, ny), vid(ix + 1, ny)]),
    ]
    markers = [np.full(len(e), m) for m, e in enumerate(edges)]
    mesh = TriMesh(vertices, triangles, np.vstack(edges), np.concatenate(markers))
    mesh.grid_shape = (nx, ny)
    return mesh


def refine_uniform(mesh: TriMesh) -> TriMesh:
    """Split every triangle into four through its edge midpoints."""
    nv = mesh.n_vertices
    edges = mesh.edges
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mids])

    t = mesh.triangles
    m = nv + mesh.triangle_edges  # m[:, j] is the midpoint of edge (j, j+1)
    v0, v1, v2 = t[:, 0], t[:, 1], t[:, 2]
    m01, m12, m20 = m[:, 0], m[:, 1], m[:, 2]
    children = np.stack(
        [
            np.column_stack([v0, m01, m20]),
            np.column_stack([m01, v1, m12]),
            np.column_stack([m20, m12, v2]),
            np.column_stack([m01, m12, m20]),
        ],
        axis=1,
    ).reshape(-1, 3)

    bmid = nv + mesh.boundary_edge_ids
    be = mesh.boundary_edges
    new_be = np.stack(
        [np.column_stack([be[:, 0], bmid]), np.column_stack([bmid, be[:, 1]])], axis=1
    ).reshape(-1, 2)
    new_markers = np.repeat(mesh.boundary_markers, 2)
    out = TriMesh(vertices, children, new_be, new_markers)
    if mesh.grid_shape is not None:
        out.grid_shape = (2 * mesh.grid_shape[0], 2 * mesh.grid_shape[1])
    return out
