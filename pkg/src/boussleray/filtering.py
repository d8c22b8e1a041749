"""Helmholtz filter, van Cittert deconvolution, deconvolution indicator and
the adaptive, divergence-constrained velocity filter.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .fem import FeSpace, Field, assemble_div, assemble_mass, assemble_stiffness, constrain
from .linsolve import Factorization, Recycler, SaddleFactorization, solve_saddle

BOUNDARY_MODES = ("homogeneous", "trace")


@dataclass
class IndicatorSamples:
    """Indicator values at the velocity space's quadrature points, (nt, nq)."""

    values: np.ndarray
    max_raw: float
    normalized: bool = False

    def cell_means(self, wdet: np.ndarray) -> np.ndarray:
        return (self.values * wdet).sum(axis=1) / wdet.sum(axis=1)

    def mean(self, wdet: np.ndarray) -> float:
        return float((self.values * wdet).sum() / wdet.sum())

    @classmethod
    def constant(cls, space: FeSpace, value: float = 1.0) -> "IndicatorSamples":
        shape = space.tabulate()[2].shape
        return cls(np.full(shape, float(value)), float(value), False)


class FilterContext:
    """Filter radius, deconvolution order and the cached filter operators.

    ``boundary`` sets the Dirichlet data of filtered velocities: ``homogeneous``
    filters into H^1_0, ``trace`` keeps the boundary values of the input
    field (identical for wall-bounded flows; needed when the velocity has
    nonzero boundary data).
    """

    def __init__(self, alpha: float, N: int, space_vel: FeSpace, space_pres: FeSpace,
                 boundary: str = "homogeneous", tol: float = 1e-10, backend: str = "direct"):
        if not alpha > 0:
            raise ValueError(f"filter radius must be positive, got {alpha}")
        if N < 0 or int(N) != N:
            raise ValueError(f"deconvolution order must be a nonnegative integer, got {N}")
        if boundary not in BOUNDARY_MODES:
            raise ValueError(f"boundary must be one of {BOUNDARY_MODES}")
        self.alpha = float(alpha)
        self.N = int(N)
        self.space_vel = space_vel
        self.space_pres = space_pres
        self.boundary = boundary
        self.tol = tol
        self.backend = backend
        self._recycler = Recycler()
        self._leray = None

    @cached_property
    def mass(self):
        return assemble_mass(self.space_vel)

    @cached_property
    def stiffness(self):
        return assemble_stiffness(self.space_vel)

    @cached_property
    def helmholtz_matrix(self):
        """``alpha^2 K + M`` before boundary constraints."""
        return (self.alpha**2 * self.stiffness + self.mass).tocsr()

    @cached_property
    def bnd(self) -> np.ndarray:
        return self.space_vel.boundary_dofs

    @cached_property
    def _helmholtz(self) -> Factorization:
        n = self.space_vel.ndofs
        A, _ = constrain(self.helmholtz_matrix, np.zeros(n), self.bnd, 0.0)
        return Factorization(A, spd=True, tol=self.tol)

    @cached_property
    def _helmholtz_bcols(self):
        return self.helmholtz_matrix[:, self.bnd].tocsr()

    @cached_property
    def div(self):
        return assemble_div(self.space_vel, self.space_pres)

    @cached_property
    def pressure_weights(self) -> np.ndarray:
        return assemble_mass(self.space_pres) @ np.ones(self.space_pres.ndofs)

    @cached_property
    def vector_fixed(self) -> np.ndarray:
        n = self.space_vel.ndofs
        return np.concatenate([self.bnd, self.bnd + n])

    def boundary_data(self, coeffs: np.ndarray) -> np.ndarray:
        if self.boundary == "homogeneous":
            return np.zeros(len(self.bnd))
        return coeffs[self.bnd]

    def apply_scalar(self, coeffs: np.ndarray) -> np.ndarray:
        """One application of the discrete Helmholtz filter to scalar coefficients."""
        g = self.boundary_data(coeffs)
        rhs = self.mass @ coeffs
        if np.any(g):
            rhs -= self._helmholtz_bcols @ g
        rhs[self.bnd] = g
        x, _ = self._helmholtz.solve(rhs)
        return x

    def apply(self, psi: Field) -> Field:
        if psi.space is not self.space_vel:
            raise ValueError("filter input must live on the velocity space")
        out = np.concatenate([self.apply_scalar(c) for c in psi.blocks()])
        return psi.with_coeffs(out)

    def leray_solver(self) -> SaddleFactorization:
        if self._leray is None:
            H = self.helmholtz_matrix
            F = sp.block_diag([H, H], format="csr")
            self._leray = SaddleFactorization(
                F, -self.div, self.vector_fixed, self.pressure_weights, self.tol
            )
        return self._leray


def helmholtz_filter(ctx: FilterContext, psi: Field) -> Field:
    """Discrete Helmholtz filter, componentwise for vector fields."""
    out = ctx.apply(psi)
    out.meta["alpha"] = ctx.alpha
    return out


def van_cittert(ctx: FilterContext, psi_filtered: Field) -> Field:
    """``D_N psi_filtered = sum_{n=0}^{N} (I - F)^n psi_filtered``."""
    term = psi_filtered.coeffs.copy()
    total = term.copy()
    n = ctx.space_vel.ndofs
    for _ in range(ctx.N):
        filt = np.concatenate(
            [ctx.apply_scalar(term[c * n : (c + 1) * n]) for c in range(psi_filtered.components)]
        )
        term = term - filt
        total += term
    out = psi_filtered.with_coeffs(total)
    out.meta["alpha"] = ctx.alpha
    return out


def indicator(ctx: FilterContext, u: Field, normalize: bool = True) -> IndicatorSamples:
    """``|u - D_N F u|`` sampled at the velocity quadrature points.

    With ``normalize`` the samples are divided by ``max(1, max_raw)``.
    """
    deconv = van_cittert(ctx, helmholtz_filter(ctx, u))
    diff = (u - deconv).at_quadrature()
    if diff.ndim == 2:
        a = np.abs(diff)
    else:
        a = np.sqrt(np.sum(diff**2, axis=-1))
    max_raw = float(a.max()) if a.size else 0.0
    if normalize:
        a = a / max(1.0, max_raw)
    return IndicatorSamples(a, max_raw, normalize)


def adaptive_filter(ctx: FilterContext, u: Field, a: IndicatorSamples,
                    constrained: bool = True) -> tuple[Field, Field]:
    """Solve for the adaptively filtered velocity and its multiplier.

    ``alpha^2 (a grad ubar, grad v) + (ubar, v) - (lambda, div v) = (u, v)``
    with ``(div ubar, q) = 0``. Returns ``(ubar, lambda)`` with mean-zero
    lambda. ``constrained=False`` drops the divergence constraint and
    returns a zero multiplier.
    """
    V, Q = ctx.space_vel, ctx.space_pres
    n = V.ndofs
    if np.any(a.values < 0):
        raise ValueError("indicator must be nonnegative")
    A = (ctx.alpha**2 * assemble_stiffness(V, a.values) + ctx.mass).tocsr()
    rhs = np.concatenate([ctx.mass @ c for c in u.blocks()])
    g = np.concatenate([ctx.boundary_data(c) for c in u.blocks()])
    if not constrained:
        coeffs = []
        for c in range(2):
            nb = len(ctx.bnd)
            Ac, bc = constrain(A, rhs[c * n : (c + 1) * n], ctx.bnd, g[c * nb : (c + 1) * nb])
            coeffs.append(Factorization(Ac, spd=True, tol=ctx.tol).solve(bc)[0])
        return u.with_coeffs(np.concatenate(coeffs)), Q.zeros()
    F = sp.block_diag([A, A], format="csr")
    ubar, lam, _ = solve_saddle(
        F, -ctx.div, rhs, None, tol=ctx.tol, fixed=ctx.vector_fixed, fixed_values=g,
        mean_weights=ctx.pressure_weights, backend=ctx.backend, recycler=ctx._recycler,
    )
    out = u.with_coeffs(ubar)
    out.meta["alpha"] = ctx.alpha
    return out, Field(Q, lam)


def leray_alpha_filter(ctx: FilterContext, u: Field) -> tuple[Field, Field]:
    """Divergence-constrained Helmholtz filter (indicator identically one)."""
    rhs = np.concatenate([ctx.mass @ c for c in u.blocks()])
    g = np.concatenate([ctx.boundary_data(c) for c in u.blocks()])
    ubar, lam, _ = ctx.leray_solver().solve(rhs, None, g)
    out = u.with_coeffs(ubar)
    out.meta["alpha"] = ctx.alpha
    return out, Field(ctx.space_pres, lam)
