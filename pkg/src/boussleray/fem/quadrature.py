"""Collapsed Gauss rules on the reference triangle."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature on the reference triangle (0,0), (1,0), (0,1).

    ``points`` are barycentric coordinates, shape (nq, 3); ``weights`` sum to
    one, so physical integrals are ``area * sum(w * f)``.
    """

    points: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def xy(self) -> np.ndarray:
        """Reference-triangle Cartesian coordinates of the points."""
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def triangle_rule(order: int) -> QuadratureRule:
    """Rule exact for polynomials of total degree ``order``.

    Conical product of Gauss-Jacobi(1, 0) in the collapsed direction and
    Gauss-Legendre in the other; all points lie strictly inside.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    n = max(1, (order + 2) // 2)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    xl, wl = roots_legendre(n)
    s = 0.5 * (1.0 + xj)
    t = 0.5 * (1.0 + xl)
    S, T = np.meshgrid(s, t, indexing="ij")
    x = S.ravel()
    y = ((1.0 - S) * T).ravel()
    w = np.outer(wj, wl).ravel()
    w = w / w.sum()
    pts = np.column_stack([1.0 - x - y, x, y])
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(pts, w, order)
