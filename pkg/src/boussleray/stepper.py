"""Linearized BDF2 time stepping for the filtered Boussinesq system.

Each step is three decoupled linear solves: the velocity filter, the
temperature transport and the momentum/pressure saddle point problem. All
matrices are built from known quantities (steps n and n-1) only.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fem import (
    FeSpace,
    Field,
    ConfigurationError,
    assemble_div,
    assemble_load,
    assemble_mass,
    assemble_skew_convection_scalar,
    assemble_stiffness,
    boundary_values,
    constrain,
)
from .fem import assembly as _asm
from . import _kernels as kern
from .filtering import (
    FilterContext,
    IndicatorSamples,
    adaptive_filter,
    indicator,
    leray_alpha_filter,
)
from .linsolve import Recycler, SolveError, solve_general, solve_saddle

log = logging.getLogger(__name__)


class Model(str, enum.Enum):
    NO_MODEL = "nomodel"
    LERAY_ALPHA = "leray-alpha"
    ADAPTIVE = "adaptive"


class StepError(RuntimeError):
    def __init__(self, msg, step_index=None):
        super().__init__(f"step {step_index}: {msg}" if step_index is not None else msg)
        self.step_index = step_index


@dataclass
class FlowParams:
    Re: float
    Ri: float
    Pr: float
    dt: float
    t_end: float
    alpha: float = 1.0
    N: int = 0
    model: Model = Model.ADAPTIVE
    normalize: bool = True
    # "extrapolated" -> indicator of 2u^n - u^{n-1}; "current" -> of u^n
    indicator_arg: str = "extrapolated"
    constrained_filter: bool = True
    # temperature convection by 2u^n - u^{n-1} ("extrapolated") or by the
    # velocity just computed in the same step ("updated")
    temperature_wind: str = "extrapolated"

    def __post_init__(self):
        self.model = Model(self.model)
        bad = [k for k in ("Re", "Ri", "Pr", "dt", "t_end", "alpha") if not getattr(self, k) > 0]
        if bad:
            raise ConfigurationError(f"parameters must be positive: {', '.join(bad)}")
        if self.N < 0:
            raise ConfigurationError("deconvolution order must be nonnegative")
        if self.indicator_arg not in ("extrapolated", "current"):
            raise ConfigurationError(f"unknown indicator argument {self.indicator_arg!r}")
        if self.temperature_wind not in ("extrapolated", "updated"):
            raise ConfigurationError(f"unknown temperature wind {self.temperature_wind!r}")
        m = self.t_end / self.dt
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise ConfigurationError(f"t_end={self.t_end} is not a multiple of dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Spaces:
    vel: FeSpace
    pres: FeSpace
    temp: FeSpace

    @classmethod
    def taylor_hood(cls, mesh, k: int = 2) -> "Spaces":
        """(P_k, P_{k-1}, P_k); temperature shares the velocity's scalar space."""
        vel = FeSpace(mesh, k)
        return cls(vel, FeSpace(mesh, k - 1), vel)


@dataclass
class Forcing:
    """Body forces and boundary data; ``None`` means zero.

    ``T_bc=None`` leaves temperature unconstrained (adiabatic walls).
    """

    f: object = None
    gamma: object = None
    u_bc: object = None
    T_bc: object = None


@dataclass
class SimState:
    u_prev: Field
    u_curr: Field
    T_prev: Field
    T_curr: Field
    p_curr: Field
    step_index: int
    time: float

    def copy(self) -> "SimState":
        return SimState(
            self.u_prev.copy(), self.u_curr.copy(), self.T_prev.copy(), self.T_curr.copy(),
            self.p_curr.copy(), self.step_index, self.time,
        )


@dataclass
class EnergyLedger:
    """Running terms of the discrete energy inequality.

    Dual norms of the forcings are replaced by ``C_P * ||.||_{L2}`` with the
    Poincare constant bounded by the domain diameter.
    """

    poincare: float
    init_u: float = 0.0  # ||u^1||^2 + ||2u^1 - u^0||^2
    init_T: float = 0.0
    sum_grad_u: float = 0.0  # dt * sum ||grad u^{n+1}||^2
    sum_grad_T: float = 0.0
    sum_f: float = 0.0  # dt * sum ||f^{n+1}||^2
    sum_gamma: float = 0.0
    rows: list = field(default_factory=list)


_BDF2 = (1.5, -2.0, 0.5)
_BE = (1.0, -1.0, 0.0)


class BoussinesqSolver:
    """Operators and solves for one mesh, parameter set and forcing."""

    def __init__(self, spaces: Spaces, params: FlowParams, forcing: Forcing | None = None,
                 ctx: FilterContext | None = None, tol: float = 1e-10, backend: str = "direct",
                 filter_boundary: str = "homogeneous"):
        self.spaces = spaces
        self.params = params
        self.forcing = forcing or Forcing()
        self.tol = tol
        self.backend = backend
        V, Q, Y = spaces.vel, spaces.pres, spaces.temp
        if ctx is None:
            ctx = FilterContext(params.alpha, params.N, V, Q, boundary=filter_boundary,
                                tol=tol, backend=backend)
        self.ctx = ctx
        self.Mv = ctx.mass
        self.Kv = ctx.stiffness
        self.Mt = self.Mv if Y is V else assemble_mass(Y)
        self.Kt = self.Kv if Y is V else assemble_stiffness(Y)
        self.D = assemble_div(V, Q)
        self.pw = ctx.pressure_weights
        self.fixed_u = np.concatenate([V.boundary_dofs, V.boundary_dofs + V.ndofs])
        self._mom_recycler = Recycler()
        self._temp_recycler = Recycler()
        x0, x1, y0, y1 = V.mesh.bounding_box
        self.ledger = EnergyLedger(poincare=math.hypot(x1 - x0, y1 - y0))
        self.last_indicator: IndicatorSamples | None = None
        self.last_reports: dict = {}

    # -- norms -----------------------------------------------------------
    def norm2_u(self, c) -> float:
        n = self.spaces.vel.ndofs
        return float(sum(c[i * n:(i + 1) * n] @ (self.Mv @ c[i * n:(i + 1) * n]) for i in range(2)))

    def grad2_u(self, c) -> float:
        n = self.spaces.vel.ndofs
        return float(sum(c[i * n:(i + 1) * n] @ (self.Kv @ c[i * n:(i + 1) * n]) for i in range(2)))

    def norm2_T(self, c) -> float:
        return float(c @ (self.Mt @ c))

    def grad2_T(self, c) -> float:
        return float(c @ (self.Kt @ c))

    # -- pieces of a step ------------------------------------------------
    def select_wind(self, u_curr: Field, u_prev: Field | None = None,
                    force_indicator: IndicatorSamples | None = None):
        """Convecting velocity for the momentum step.

        ``u_prev=None`` means a one-step start (no extrapolation). Returns
        ``(wind, indicator_samples_or_None)``.
        """
        p = self.params
        w = u_curr if u_prev is None else 2.0 * u_curr - u_prev
        if p.model is Model.NO_MODEL:
            return w, None
        if p.model is Model.LERAY_ALPHA:
            if force_indicator is not None:
                return adaptive_filter(self.ctx, w, force_indicator, p.constrained_filter)[0], force_indicator
            if p.constrained_filter:
                return leray_alpha_filter(self.ctx, w)[0], None
            return adaptive_filter(self.ctx, w, IndicatorSamples.constant(self.spaces.vel),
                                   constrained=False)[0], None
        if force_indicator is not None:
            a = force_indicator
        else:
            arg = w if p.indicator_arg == "extrapolated" else u_curr
            a = indicator(self.ctx, arg, normalize=p.normalize)
        ubar, _ = adaptive_filter(self.ctx, w, a, p.constrained_filter)
        return ubar, a

    def advance_temperature(self, T_curr: Field, T_prev: Field | None, conv_wind: Field,
                            t_new: float, scheme=_BDF2) -> Field:
        p = self.params
        Y = self.spaces.temp
        a0, a1, a2 = scheme
        A = (a0 / p.dt) * self.Mt + assemble_skew_convection_scalar(Y, conv_wind) \
            + (1.0 / (p.Re * p.Pr)) * self.Kt
        hist = a1 * T_curr.coeffs + (a2 * T_prev.coeffs if T_prev is not None and a2 else 0.0)
        rhs = -(1.0 / p.dt) * (self.Mt @ hist)
        if self.forcing.gamma is not None:
            rhs = rhs + assemble_load(Y, self.forcing.gamma, t_new)
        if self.forcing.T_bc is not None:
            dofs, vals = boundary_values(Y, self.forcing.T_bc, t_new)
            A, rhs = constrain(A, rhs, dofs, vals)
        x, rep = solve_general(A, rhs, self.tol, self.backend, recycler=self._temp_recycler)
        self.last_reports["temperature"] = rep
        return Field(Y, x)

    def buoyancy_load(self, T_ext: Field) -> np.ndarray:
        V = self.spaces.vel
        if T_ext.space is V:
            ty = self.Mv @ T_ext.coeffs
        else:
            phi, _, wdet = V.tabulate()
            vals = np.ascontiguousarray(T_ext.at_quadrature(V.quadrature))
            ty = kern.scatter_add(V.elem_dofs, kern.element_load(phi, vals, wdet), V.ndofs)
        return np.concatenate([np.zeros(V.ndofs), self.params.Ri * ty])

    def advance_momentum(self, u_curr: Field, u_prev: Field | None, T_ext: Field, wind: Field,
                         t_new: float, scheme=_BDF2) -> tuple[Field, Field]:
        """Velocity and mean-zero pressure at ``t_new``; buoyancy uses ``T_ext``
        (the extrapolated old temperature), never the new one."""
        p = self.params
        V, Q = self.spaces.vel, self.spaces.pres
        a0, a1, a2 = scheme
        C = assemble_skew_convection_scalar(V, wind)
        Fs = (a0 / p.dt) * self.Mv + (1.0 / p.Re) * self.Kv
        F = sp.block_diag([Fs + C, Fs + C], format="csr")
        hist = a1 * u_curr.coeffs + (a2 * u_prev.coeffs if u_prev is not None and a2 else 0.0)
        n = V.ndofs
        Mh = np.concatenate([self.Mv @ hist[:n], self.Mv @ hist[n:]])
        rhs = -(1.0 / p.dt) * Mh + self.buoyancy_load(T_ext)
        if self.forcing.f is not None:
            rhs = rhs + assemble_load(V, self.forcing.f, t_new, components=2)
        if self.forcing.u_bc is not None:
            _, vals = boundary_values(V, self.forcing.u_bc, t_new, components=2)
        else:
            vals = np.zeros(len(self.fixed_u))
        u, pr, rep = solve_saddle(
            F, -self.D, rhs, None, self.tol, fixed=self.fixed_u, fixed_values=vals,
            mean_weights=self.pw, backend=self.backend, recycler=self._mom_recycler,
        )
        self.last_reports["momentum"] = rep
        return Field(V, u, 2), Field(Q, pr)

    def divergence_residual(self, u: Field) -> float:
        return float(np.abs(self.D @ u.coeffs).max())

    # -- full steps ------------------------------------------------------
    def step(self, state: SimState) -> SimState:
        """One BDF2 step: filter, temperature, momentum (momentum before
        temperature when the temperature is convected by the new velocity)."""
        p = self.params
        n1 = state.step_index + 1
        t_new = n1 * p.dt
        try:
            wind, a = self.select_wind(state.u_curr, state.u_prev)
            self.last_indicator = a
            T_ext = 2.0 * state.T_curr - state.T_prev
            if p.temperature_wind == "updated":
                u_new, p_new = self.advance_momentum(state.u_curr, state.u_prev, T_ext, wind, t_new)
                T_new = self.advance_temperature(state.T_curr, state.T_prev, u_new, t_new)
            else:
                u_ext = 2.0 * state.u_curr - state.u_prev
                T_new = self.advance_temperature(state.T_curr, state.T_prev, u_ext, t_new)
                u_new, p_new = self.advance_momentum(state.u_curr, state.u_prev, T_ext, wind, t_new)
        except (SolveError, FloatingPointError) as exc:
            raise StepError(str(exc), n1) from exc
        new = SimState(state.u_curr, u_new, state.T_curr, T_new, p_new, n1, t_new)
        self._record(new)
        return new

    def initialize(self, ic_u, ic_T, strategy: str = "backward_euler_bootstrap",
                   exact_u=None, exact_T=None, exact_p=None) -> SimState:
        """Build the two starting levels.

        ``ic_u(x, y) -> (ux, uy)`` and ``ic_T(x, y)`` give level 0. Level 1 is
        either interpolated from ``exact_u(x, y, t)``/``exact_T`` at ``t = dt``
        or computed by one backward Euler step of the same spatial scheme.
        """
        p = self.params
        V, Q, Y = self.spaces.vel, self.spaces.pres, self.spaces.temp
        u0 = V.interpolate(ic_u, 2)
        T0 = Y.interpolate(ic_T)
        if strategy == "interpolate_exact":
            if exact_u is None or exact_T is None:
                raise ConfigurationError("interpolate_exact needs the exact solution")
            u1 = V.interpolate(lambda x, y: exact_u(x, y, p.dt), 2)
            T1 = Y.interpolate(lambda x, y: exact_T(x, y, p.dt))
            if exact_p is not None:
                p1 = Q.interpolate(lambda x, y: exact_p(x, y, p.dt))
                p1 = p1.with_coeffs(p1.coeffs - self.pw @ p1.coeffs / self.pw.sum())
            else:
                p1 = Q.zeros()
        elif strategy == "backward_euler_bootstrap":
            wind, a = self.select_wind(u0, None)
            u1, p1 = self.advance_momentum(u0, None, T0, wind, p.dt, scheme=_BE)
            T_wind = u1 if p.temperature_wind == "updated" else u0
            T1 = self.advance_temperature(T0, None, T_wind, p.dt, scheme=_BE)
        else:
            raise ConfigurationError(f"unknown initialization strategy {strategy!r}")
        state = SimState(u0, u1, T0, T1, p1, 1, p.dt)
        self._start_ledger(state)
        return state

    def run(self, state: SimState, n_steps: int | None = None, callback=None) -> SimState:
        n_steps = self.params.n_steps - state.step_index if n_steps is None else n_steps
        for _ in range(n_steps):
            state = self.step(state)
            if callback is not None:
                callback(self, state)
        return state

    # -- energy bookkeeping ----------------------------------------------
    def _start_ledger(self, state: SimState):
        L = self.ledger
        u1, u0 = state.u_curr.coeffs, state.u_prev.coeffs
        T1, T0 = state.T_curr.coeffs, state.T_prev.coeffs
        L.init_u = self.norm2_u(u1) + self.norm2_u(2 * u1 - u0)
        L.init_T = self.norm2_T(T1) + self.norm2_T(2 * T1 - T0)
        L.sum_grad_u = L.sum_grad_T = L.sum_f = L.sum_gamma = 0.0
        L.rows = []

    def _record(self, state: SimState):
        p = self.params
        L = self.ledger
        V, Y = self.spaces.vel, self.spaces.temp
        u, up = state.u_curr.coeffs, state.u_prev.coeffs
        T, Tp = state.T_curr.coeffs, state.T_prev.coeffs
        L.sum_grad_u += p.dt * self.grad2_u(u)
        L.sum_grad_T += p.dt * self.grad2_T(T)
        if self.forcing.f is not None:
            L.sum_f += p.dt * _asm.l2_norm_squared_of_function(V, self.forcing.f, state.time, 2)
        if self.forcing.gamma is not None:
            L.sum_gamma += p.dt * _asm.l2_norm_squared_of_function(Y, self.forcing.gamma, state.time)
        row = {
            "step": state.step_index,
            "time": state.time,
            "u_norm2": self.norm2_u(u),
            "T_norm2": self.norm2_T(T),
            "u_ext_norm2": self.norm2_u(2 * u - up),
            "T_ext_norm2": self.norm2_T(2 * T - Tp),
            "visc_u": 2.0 / p.Re * L.sum_grad_u,
            "visc_T": 2.0 / (p.Re * p.Pr) * L.sum_grad_T,
            "div_residual": self.divergence_residual(state.u_curr),
        }
        row["lhs"] = row["u_norm2"] + row["T_norm2"] + row["u_ext_norm2"] + row["T_ext_norm2"] \
            + row["visc_u"] + row["visc_T"]
        row["rhs"] = energy_bound_rhs(L, p, state.time)
        L.rows.append(row)


def energy_bound_rhs(ledger: EnergyLedger, params: FlowParams, t: float) -> float:
    cp2 = ledger.poincare**2
    Re, Ri = params.Re, params.Ri
    c_T = ledger.init_T + 2.0 * Re * params.Pr * cp2 * ledger.sum_gamma
    return (
        ledger.init_u
        + 4.0 * Re * cp2 * ledger.sum_f
        + c_T
        + 4.0 * cp2 * Ri**2 * Re * c_T * t
    )


@dataclass
class EnergyReport:
    holds: list
    lhs: list
    rhs: list

    @property
    def all_hold(self) -> bool:
        return all(self.holds)


def check_energy_bound(ledger: EnergyLedger, params: FlowParams) -> EnergyReport:
    """Per-step check ``lhs <= rhs`` of the discrete energy inequality."""
    lhs = [r["lhs"] for r in ledger.rows]
    rhs = [r["rhs"] for r in ledger.rows]
    holds = [
        bool(np.isfinite(a) and np.isfinite(b) and a <= b * (1 + 1e-12)) for a, b in zip(lhs, rhs)
    ]
    return EnergyReport(holds, lhs, rhs)
