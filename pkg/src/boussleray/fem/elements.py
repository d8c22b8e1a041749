"""Lagrange shape functions of degree 1-3 on the reference triangle.

Local node order: the three vertices, then ``k - 1`` nodes on each edge
(edge j runs from local vertex j to vertex j+1 mod 3), then interior nodes.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def n_local(k: int) -> int:
    return (k + 1) * (k + 2) // 2


def _monomials(k):
    return [(a, d - a) for d in range(k + 1) for a in range(d, -1, -1)]


@lru_cache(maxsize=None)
def reference_nodes(k: int) -> np.ndarray:
    if k not in (1, 2, 3):
        raise ValueError(f"unsupported degree {k}")
    nodes = [v for v in VERTS]
    for j in range(3):
        a, b = VERTS[j], VERTS[(j + 1) % 3]
        for i in range(1, k):
            nodes.append(a + i / k * (b - a))
    if k == 3:
        nodes.append(np.array([1.0 / 3.0, 1.0 / 3.0]))
    out = np.array(nodes)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _coefficients(k: int) -> np.ndarray:
    nodes = reference_nodes(k)
    V = np.array([[x**a * y**b for (a, b) in _monomials(k)] for x, y in nodes])
    # column j holds the monomial coefficients of basis function j
    return np.linalg.inv(V)


def shape_values(k: int, xy) -> np.ndarray:
    """Basis values at reference points, shape (npts, nloc)."""
    xy = np.atleast_2d(xy)
    x, y = xy[:, 0], xy[:, 1]
    P = np.column_stack([x**a * y**b for (a, b) in _monomials(k)])
    return P @ _coefficients(k)


def shape_gradients(k: int, xy) -> np.ndarray:
    """Reference gradients at points, shape (npts, nloc, 2)."""
    xy = np.atleast_2d(xy)
    x, y = xy[:, 0], xy[:, 1]
    mons = _monomials(k)

    def dpow(v, p):
        return p * v ** (p - 1) if p > 0 else np.zeros_like(v)

    Px = np.column_stack([dpow(x, a) * y**b for (a, b) in mons])
    Py = np.column_stack([x**a * dpow(y, b) for (a, b) in mons])
    C = _coefficients(k)
    return np.stack([Px @ C, Py @ C], axis=2)
