"""Temporal and spatial convergence studies on the manufactured solution."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..mesh import build_rect_mesh
from ..stepper import BoussinesqSolver, FlowParams, Model, Spaces
from .mms import MmsProblem
from .norms import ErrorNorms

log = logging.getLogger(__name__)

NORMS = ("err_u_L2", "err_u_21", "err_T_L2", "err_T_21")


def observed_rate(coarse: float, fine: float) -> float:
    """``log2(coarse / fine)``; NaN when either error is not positive."""
    if not (coarse > 0 and fine > 0) or not (np.isfinite(coarse) and np.isfinite(fine)):
        return float("nan")
    return math.log2(coarse / fine)


@dataclass
class RateRow:
    resolution: float
    errors: tuple
    note: str = ""
    wall_time: float = 0.0


@dataclass
class RateTable:
    """Error rows for a halving sequence; rates are derived, never stored."""

    label: str
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, resolution, errors, note="", wall_time=0.0):
        self.rows.append(RateRow(float(resolution), tuple(float(e) for e in errors), note, wall_time))

    def rates(self, norm: int | str) -> list:
        j = NORMS.index(norm) if isinstance(norm, str) else norm
        out = [float("nan")]
        for a, b in zip(self.rows, self.rows[1:]):
            out.append(observed_rate(a.errors[j], b.errors[j]))
        return out

    def column(self, norm: int | str) -> list:
        j = NORMS.index(norm) if isinstance(norm, str) else norm
        return [r.errors[j] for r in self.rows]

    def format(self) -> str:
        lines = [f"{self.label}", "res        " + "  ".join(f"{n:>10} {'rate':>6}" for n in NORMS)]
        rates = [self.rates(j) for j in range(len(NORMS))]
        for i, r in enumerate(self.rows):
            cells = [f"{r.errors[j]:10.4e} {rates[j][i]:6.3f}" for j in range(len(NORMS))]
            lines.append(f"{r.resolution:<10.6g} " + "  ".join(cells) + (f"  {r.note}" if r.note else ""))
        return "\n".join(lines)


def run_mms(problem: MmsProblem, n_cells: int, degree: int, dt: float, t_end: float,
            model=Model.ADAPTIVE, N: int = 0, alpha: float | None = None,
            temperature_wind: str = "extrapolated", backend: str = "direct",
            filter_boundary: str = "trace") -> ErrorNorms:
    """One MMS run on ``n_cells x n_cells`` squares of the unit square.

    The starting levels interpolate the exact solution; the ``|||.|||_{2,1}``
    sum covers levels 1..M.
    """
    mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), n_cells, n_cells)
    spaces = Spaces.taylor_hood(mesh, degree)
    params = FlowParams(
        problem.Re, problem.Ri, problem.Pr, dt, t_end,
        alpha=mesh.h_max if alpha is None else alpha, N=N, model=model,
        temperature_wind=temperature_wind,
    )
    solver = BoussinesqSolver(spaces, params, problem.forcing(), backend=backend,
                              filter_boundary=filter_boundary)
    state = solver.initialize(problem.ic_u, problem.ic_T, "interpolate_exact",
                              problem.u, problem.T, problem.p)
    norms = ErrorNorms(dt)
    norms.add_step(1, state.u_curr, state.T_curr, problem, state.time)

    def record(_, st):
        norms.add_step(st.step_index, st.u_curr, st.T_curr, problem, st.time)

    state = solver.run(state, callback=record)
    norms.finalize(state.u_curr, state.T_curr, problem, state.time, params.n_steps)
    norms.solver = solver
    return norms


def run_temporal_study(base: MmsProblem, h_fixed: float, dts, t_end: float | None = 1.0,
                       degree: int = 2, model=Model.ADAPTIVE, N: int = 0,
                       temperature_wind: str = "extrapolated", backend: str = "direct",
                       steps_per_row: int | None = None) -> RateTable:
    """Errors for a halving sequence of time steps on a fixed mesh.

    With ``t_end=None`` each row integrates to ``t* = steps_per_row * dt``
    (the reading in which the listed value is the final time).
    """
    n_cells = int(round(1.0 / h_fixed))
    table = RateTable("temporal", meta={
        "h": h_fixed, "degree": degree, "model": Model(model).value, "N": N,
        "t_end": t_end, "temperature_wind": temperature_wind,
    })
    for dt in dts:
        t_row = t_end if t_end is not None else steps_per_row * dt
        t0 = time.perf_counter()
        try:
            nrm = run_mms(base, n_cells, degree, dt, t_row, model, N,
                          temperature_wind=temperature_wind, backend=backend)
            table.add(dt, nrm.as_tuple(), wall_time=time.perf_counter() - t0)
        except Exception as exc:  # annotate the row, keep the study going
            log.warning("temporal row dt=%g failed: %s", dt, exc)
            table.add(dt, (float("nan"),) * 4, note=f"failed: {exc}")
    return table


def run_spatial_study(base: MmsProblem, hs, degree: int = 2, t_end: float = 1e-3,
                      dt: float = 1e-4, model=Model.ADAPTIVE, N: int = 0,
                      backend: str = "direct") -> RateTable:
    """Errors for a halving sequence of mesh sizes, ``alpha = h`` per row."""
    table = RateTable("spatial", meta={"degree": degree, "t_end": t_end, "dt": dt,
                                       "model": Model(model).value, "N": N})
    for h in hs:
        n_cells = int(round(1.0 / h))
        t0 = time.perf_counter()
        try:
            nrm = run_mms(base, n_cells, degree, dt, t_end, model, N, backend=backend)
            table.add(h, nrm.as_tuple(), wall_time=time.perf_counter() - t0)
        except Exception as exc:
            log.warning("spatial row h=%g failed: %s", h, exc)
            table.add(h, (float("nan"),) * 4, note=f"failed: {exc}")
    return table
