"""Exact algebraic identities of the discrete operators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fem import assemble_skew_convection_scalar
from ..filtering import (
    FilterContext,
    IndicatorSamples,
    adaptive_filter,
    helmholtz_filter,
    leray_alpha_filter,
    van_cittert,
)
from ..mesh import build_rect_mesh
from ..stepper import BoussinesqSolver, Forcing, FlowParams, Model, Spaces


@dataclass
class PropertyResult:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.value:.3e} (tol {self.tol:.0e})"


def _mnorm(M, c, ncomp):
    n = M.shape[0]
    return float(np.sqrt(sum(c[i * n:(i + 1) * n] @ (M @ c[i * n:(i + 1) * n]) for i in range(ncomp))))


def run_property_suite(n_cells: int = 6, degree: int = 2, seed: int = 0, tol: float = 1e-10,
                       n_steps: int = 4) -> list:
    """Check the identities on a small mesh with random data.

    Returns one :class:`PropertyResult` per identity; values are relative
    defects except for the divergence residual, which is absolute.
    """
    rng = np.random.default_rng(seed)
    mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), n_cells, n_cells)
    spaces = Spaces.taylor_hood(mesh, degree)
    V, Q = spaces.vel, spaces.pres
    ctx = FilterContext(mesh.h_max, 0, V, Q)
    M = ctx.mass
    out = []

    psi = V.zeros(2).with_coeffs(rng.standard_normal(2 * V.ndofs))
    psi_f = helmholtz_filter(ctx, psi)
    worst = 0.0
    for N in range(4):
        ctx.N = N
        lhs = psi - van_cittert(ctx, psi_f)
        rhs = psi.coeffs.copy()
        for _ in range(N + 1):
            rhs = rhs - ctx.apply(psi.with_coeffs(rhs)).coeffs
        worst = max(worst, np.linalg.norm(lhs.coeffs - rhs) / np.linalg.norm(rhs))
    ctx.N = 0
    out.append(PropertyResult("deconvolution identity N<=3", worst, tol))

    w = V.zeros(2).with_coeffs(rng.standard_normal(2 * V.ndofs))
    C = assemble_skew_convection_scalar(V, w)
    v = rng.standard_normal(2 * V.ndofs)
    n = V.ndofs
    vBv = sum(v[i * n:(i + 1) * n] @ (C @ v[i * n:(i + 1) * n]) for i in range(2))
    scale = sum(np.linalg.norm(v[i * n:(i + 1) * n]) * np.linalg.norm(C @ v[i * n:(i + 1) * n]) for i in range(2))
    out.append(PropertyResult("skew-symmetry v^T B v", abs(vBv) / scale, tol))
    th = rng.standard_normal(spaces.temp.ndofs)
    Ct = assemble_skew_convection_scalar(spaces.temp, w)
    out.append(PropertyResult(
        "skew-symmetry theta^T C theta",
        abs(th @ (Ct @ th)) / (np.linalg.norm(th) * np.linalg.norm(Ct @ th)), tol,
    ))

    ratio_h = _mnorm(M, psi_f.coeffs, 2) / _mnorm(M, psi.coeffs, 2)
    a = IndicatorSamples(rng.uniform(0.0, 1.0, size=V.tabulate()[2].shape), 1.0)
    ubar, _ = adaptive_filter(ctx, psi, a)
    ratio_a = _mnorm(M, ubar.coeffs, 2) / _mnorm(M, psi.coeffs, 2)
    out.append(PropertyResult("filter L2 non-expansive (excess)", max(0.0, max(ratio_h, ratio_a) - 1.0), tol))

    ones = IndicatorSamples.constant(V)
    u_ad, _ = adaptive_filter(ctx, psi, ones)
    u_la, _ = leray_alpha_filter(ctx, psi)
    out.append(PropertyResult(
        "a=1 adaptive filter equals Leray-alpha filter",
        np.linalg.norm(u_ad.coeffs - u_la.coeffs) / np.linalg.norm(u_la.coeffs), tol,
    ))

    params = FlowParams(100.0, 1.0, 1.0, 0.05, 0.05 * (n_steps + 1), alpha=mesh.h_max, N=1,
                        model=Model.ADAPTIVE)
    forcing = Forcing(
        f=lambda x, y, t: (np.sin(np.pi * y) * np.cos(t), np.sin(np.pi * x)),
        gamma=lambda x, y, t: np.cos(np.pi * x) * np.sin(np.pi * y),
    )
    solver = BoussinesqSolver(spaces, params, forcing)
    state = solver.initialize(
        lambda x, y: (np.sin(np.pi * x) * np.sin(np.pi * y), 0.0 * x),
        lambda x, y: x * (1 - x) + y,
    )
    state = solver.run(state, n_steps)
    div = max(r["div_residual"] for r in solver.ledger.rows)
    out.append(PropertyResult("discrete divergence residual per step", div, 1e-9))
    return out
