"""Legacy ASCII VTK output of triangle meshes and fields."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from ..fem import Field, evaluate_field
from ..mesh import TriMesh, refine_uniform

_FMT = "%.17g"


def _point_values(field: Field, mesh: TriMesh, refined: bool) -> np.ndarray:
    nv = field.space.mesh.n_vertices
    if not refined:
        # vertex dofs share the vertex numbering
        return field.blocks()[:, :nv].T
    vals = evaluate_field(field, mesh.vertices)
    return vals[:, None] if vals.ndim == 1 else vals


def write_vtk(path, mesh: TriMesh, fields: dict | None = None, cell_data: dict | None = None,
              refine: bool = False, title: str = "boussleray") -> Path:
    """Write an unstructured triangle grid with point and cell data.

    ``fields`` maps names to scalar or 2-component :class:`Field` objects on
    ``mesh``; vector fields are written as 3D vectors with zero z. With
    ``refine`` the data are resampled on a once-refined copy of the mesh so
    that quadratic and cubic fields are visible between vertices; cell data
    are then repeated on the four children of each triangle.
    """
    fields = fields or {}
    cell_data = cell_data or {}
    out_mesh = refine_uniform(mesh) if refine else mesh
    nt = mesh.n_triangles
    for name, f in fields.items():
        if f.space.mesh is not mesh:
            raise ValueError(f"field {name!r} does not live on the given mesh")
    for name, c in cell_data.items():
        if np.shape(c) != (nt,):
            raise ValueError(f"cell data {name!r} has shape {np.shape(c)}, expected ({nt},)")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    npts, ncell = out_mesh.n_vertices, out_mesh.n_triangles
    with open(tmp, "w", newline="\n") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {npts} double\n")
        pts = np.column_stack([out_mesh.vertices, np.zeros(npts)])
        np.savetxt(fh, pts, fmt=_FMT)
        fh.write(f"CELLS {ncell} {4 * ncell}\n")
        np.savetxt(fh, np.column_stack([np.full(ncell, 3), out_mesh.triangles]), fmt="%d")
        fh.write(f"CELL_TYPES {ncell}\n")
        np.savetxt(fh, np.full((ncell, 1), 5), fmt="%d")
        if fields:
            fh.write(f"POINT_DATA {npts}\n")
            for name, f in fields.items():
                vals = _point_values(f, out_mesh, refine)
                if f.components == 1:
                    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    np.savetxt(fh, vals[:, :1], fmt=_FMT)
                else:
                    fh.write(f"VECTORS {name} double\n")
                    np.savetxt(fh, np.column_stack([vals[:, 0], vals[:, 1], np.zeros(npts)]), fmt=_FMT)
        if cell_data:
            fh.write(f"CELL_DATA {ncell}\n")
            for name, c in cell_data.items():
                c = np.repeat(np.asarray(c, float), 4) if refine else np.asarray(c, float)
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                np.savetxt(fh, c[:, None], fmt=_FMT)
    os.replace(tmp, path)
    return path
