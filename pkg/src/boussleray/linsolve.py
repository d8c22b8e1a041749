"""Linear solves for the three system shapes of a time step.

Backends
--------
``direct``
    Fresh sparse LU (SuperLU) for every solve, with a few steps of
    iterative refinement if the residual misses the tolerance.
``iterative``
    Krylov methods (CG for SPD, GMRES otherwise) with an incomplete-LU
    preconditioner. Meant for cross-checking, not production.
``recycle``
    Keeps the last LU factorization and uses it to precondition GMRES on
    the next, slightly different matrix; refactors when that stops
    converging quickly. Used for long runs where the matrix drifts slowly
    from step to step.

Every backend verifies the true residual ``||Ax - b|| / ||b||`` before
returning and raises :class:`SolveError` otherwise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

BACKENDS = ("direct", "iterative", "recycle")


@dataclass
class SolveReport:
    iterations: int | str
    residual_norm: float  # normwise backward error of the accepted solution
    wall_time: float
    backend: str = "direct"
    history: list = field(default_factory=list)

    def as_dict(self):
        return {
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "wall_time": self.wall_time,
            "backend": self.backend,
        }


class SolveError(RuntimeError):
    def __init__(self, msg, report: SolveReport | None = None):
        super().__init__(msg)
        self.report = report
        self.history = report.history if report else []


def _rel_residual(A, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    if nb == 0.0:
        return float(r)
    return float(r / nb)


def _backward_error(A, x, b) -> float:
    """Normwise backward error ``|r| / (|A| |x| + |b|)`` in the 2-norm.

    ``|A|`` is bounded by ``sqrt(|A|_1 |A|_inf)``. Unlike ``|r| / |b|``
    this stays at round-off level for a stable direct solve even when the
    solution is much larger than the data, and it never exceeds ``|r| / |b|``.
    """
    r = np.linalg.norm(A @ x - b)
    absA = abs(A)
    a_norm = np.sqrt(absA.sum(axis=0).max() * absA.sum(axis=1).max()) if A.shape[0] else 0.0
    scale = a_norm * np.linalg.norm(x) + np.linalg.norm(b)
    return float(r / scale) if scale > 0 else float(r)


def _check(A, x, b, tol, report: SolveReport, what: str):
    if not np.all(np.isfinite(x)):
        report.residual_norm = float("inf")
        raise SolveError(f"{what}: non-finite solution", report)
    report.residual_norm = _backward_error(A, x, b)
    report.history.append(report.residual_norm)
    if report.residual_norm > tol:
        raise SolveError(
            f"{what}: backward error {report.residual_norm:.3e} exceeds tol {tol:.1e}", report
        )


def _refine(A, lu, x, b, tol, report, steps=3):
    res = _rel_residual(A, x, b)
    report.history.append(res)
    k = 0
    while res > tol and k < steps:
        x = x + lu.solve(b - A @ x)
        res = _rel_residual(A, x, b)
        report.history.append(res)
        k += 1
    return x


class Factorization:
    """Reusable LU of a fixed matrix; ``solve`` checks every residual."""

    def __init__(self, A, spd: bool = False, tol: float = 1e-10):
        self.A = sp.csc_matrix(A)
        self.tol = tol
        self.spd = spd
        t0 = time.perf_counter()
        if spd:
            asym = abs(self.A - self.A.T).max() if self.A.nnz else 0.0
            if asym > 1e-12 * max(abs(self.A).max(), 1e-300):
                raise SolveError(f"matrix is not symmetric (max asymmetry {asym:.2e})")
        try:
            if spd:
                self.lu = spla.splu(
                    self.A,
                    permc_spec="MMD_AT_PLUS_A",
                    diag_pivot_thresh=0.0,
                    options={"SymmetricMode": True},
                )
            else:
                self.lu = spla.splu(self.A, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SolveError(f"factorization failed: {exc}") from exc
        if spd:
            d = self.lu.U.diagonal()
            if np.any(d <= 0.0):
                raise SolveError("matrix is not positive definite (nonpositive pivot)")
        self.factor_time = time.perf_counter() - t0

    def solve(self, b) -> tuple[np.ndarray, SolveReport]:
        t0 = time.perf_counter()
        b = np.asarray(b, dtype=float)
        report = SolveReport("direct", 0.0, 0.0, "direct")
        if not np.any(b):
            report.wall_time = time.perf_counter() - t0
            return np.zeros_like(b), report
        x = self.lu.solve(b)
        x = _refine(self.A, self.lu, x, b, self.tol, report)
        report.wall_time = time.perf_counter() - t0
        _check(self.A, x, b, self.tol, report, "factorized solve")
        return x, report


class Recycler:
    """LU kept across solves and used as a preconditioner for the next matrix.

    The LU is rebuilt when preconditioned GMRES fails within ``max_iter``
    iterations, or up front once the previous solve needed ``refresh_iter``
    iterations or more.
    """

    def __init__(self, max_iter: int = 25, refresh_iter: int = 15):
        self.lu = None
        self.max_iter = max_iter
        self.refresh_iter = refresh_iter
        self.factorizations = 0
        self._last_iter = 0

    def _factor(self, A):
        self.lu = spla.splu(sp.csc_matrix(A), permc_spec="COLAMD")
        self.factorizations += 1

    def solve(self, A, b, tol):
        report = SolveReport(0, 0.0, 0.0, "recycle")
        A = sp.csr_matrix(A)
        stale = self._last_iter >= self.refresh_iter
        self._last_iter = 0
        if self.lu is not None and self.lu.shape == A.shape and not stale:
            x = self.lu.solve(b)
            if _rel_residual(A, x, b) > tol:
                P = spla.LinearOperator(A.shape, matvec=self.lu.solve, dtype=float)
                counter = []
                x, info = spla.gmres(
                    A, b, x0=x, M=P, rtol=0.1 * tol, atol=0.0, restart=self.max_iter,
                    maxiter=1, callback=counter.append, callback_type="pr_norm",
                )
                report.iterations = len(counter)
                self._last_iter = len(counter)
            res = _rel_residual(A, x, b)
            report.history.append(res)
            if res <= tol:
                return x, report
        try:
            self._factor(A)
        except RuntimeError as exc:
            raise SolveError(f"factorization failed: {exc}", report) from exc
        x = _refine(A, self.lu, self.lu.solve(b), b, tol, report)
        report.iterations = "direct"
        return x, report


def _iterative(A, b, tol, kind, report):
    A = sp.csc_matrix(A)
    counter = []
    if kind == "spd":
        x, info = spla.cg(A, b, rtol=0.1 * tol, atol=0.0, maxiter=20 * A.shape[0],
                          callback=lambda xk: counter.append(1))
    else:
        ilu = spla.spilu(A, drop_tol=1e-6, fill_factor=20)
        P = spla.LinearOperator(A.shape, matvec=ilu.solve, dtype=float)
        x, info = spla.gmres(A, b, M=P, rtol=0.1 * tol, atol=0.0, restart=200, maxiter=50,
                             callback=counter.append, callback_type="pr_norm")
    report.iterations = len(counter)
    if info < 0:
        raise SolveError(f"iterative breakdown (info={info})", report)
    return x


def _solve(A, b, tol, backend, kind, recycler=None):
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    t0 = time.perf_counter()
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    report = SolveReport("direct", 0.0, 0.0, backend)
    if not np.any(b):
        x = np.zeros_like(b)
    elif backend == "direct":
        lu = Factorization(A, spd=(kind == "spd"), tol=tol).lu
        x = _refine(A, lu, lu.solve(b), b, tol, report)
    elif backend == "iterative":
        x = _iterative(A, b, tol, kind, report)
    else:
        recycler = recycler if recycler is not None else Recycler()
        x, rep = recycler.solve(A, b, tol)
        report.iterations = rep.iterations
        report.history.extend(rep.history)
    report.wall_time = time.perf_counter() - t0
    _check(A, x, b, tol, report, f"{kind} solve")
    return x, report


def solve_spd(A, b, tol: float = 1e-10, backend: str = "direct"):
    """Solve a symmetric positive definite system."""
    return _solve(A, b, tol, backend, "spd")


def solve_general(A, b, tol: float = 1e-10, backend: str = "direct", recycler=None):
    """Solve a nonsingular, possibly nonsymmetric system."""
    return _solve(A, b, tol, backend, "general", recycler)


def saddle_matrix(F, B, fixed=None, pin: int | None = None):
    """Block matrix ``[[F, B^T], [B, 0]]`` with velocity ``fixed`` rows/cols
    eliminated and, optionally, pressure dof ``pin`` replaced by an identity row.
    """
    F = sp.csr_matrix(F)
    B = sp.csr_matrix(B)
    n, m = F.shape[0], B.shape[0]
    if fixed is not None and len(fixed):
        keep = np.ones(n)
        keep[fixed] = 0.0
        Pk = sp.diags(keep)
        F = Pk @ F @ Pk + sp.diags(1.0 - keep)
        B = B @ Pk
    C = None
    Bt = B.T
    if pin is not None:
        keep_p = np.ones(m)
        keep_p[pin] = 0.0
        Bp = sp.diags(keep_p) @ B
        Bt = Bt @ sp.diags(keep_p)
        B = Bp
        C = sp.csr_matrix(([1.0], ([pin], [pin])), shape=(m, m))
    A = sp.bmat([[F, Bt], [B, C]], format="csr")
    A.eliminate_zeros()
    A.sort_indices()
    return A


def solve_saddle(
    F,
    B,
    f,
    g=None,
    tol: float = 1e-10,
    fixed=None,
    fixed_values=None,
    mean_weights=None,
    backend: str = "direct",
    recycler: Recycler | None = None,
):
    """Solve ``F u + B^T p = f``, ``B u = g`` with Dirichlet velocity dofs.

    ``mean_weights`` (the integrals of the pressure basis functions) selects
    the mean-zero pressure normalization: one pressure dof is fixed inside
    the factorization and the result is projected to zero mean afterwards.
    Without it the pressure is fixed only up to a constant and the
    factorization is singular up to rounding; it may fail or return an
    arbitrary pressure level.

    Returns ``(u, p, report)``; the report's residual covers both the momentum
    and the constraint rows of the full, unpinned system.
    """
    t0 = time.perf_counter()
    F = sp.csr_matrix(F)
    B = sp.csr_matrix(B)
    n, m = F.shape[0], B.shape[0]
    f = np.array(f, dtype=float)
    g = np.zeros(m) if g is None else np.array(g, dtype=float)
    fixed = np.asarray([] if fixed is None else fixed, dtype=np.int64)
    ub = np.zeros(n)
    if len(fixed):
        ub[fixed] = 0.0 if fixed_values is None else fixed_values
        f -= F @ ub
        g -= B @ ub
        f[fixed] = ub[fixed]

    pin = None
    if mean_weights is not None:
        mean_weights = np.asarray(mean_weights, dtype=float)
        pin = int(np.argmax(np.abs(mean_weights)))
    A_full = saddle_matrix(F, B, fixed)
    rhs = np.concatenate([f, g])
    A = A_full if pin is None else saddle_matrix(F, B, fixed, pin)
    rhs_solve = rhs.copy()
    if pin is not None:
        rhs_solve[n + pin] = 0.0

    report = SolveReport("direct", 0.0, 0.0, backend)
    if not np.any(rhs):
        x = np.zeros(n + m)
    else:
        try:
            if backend == "direct":
                lu = spla.splu(sp.csc_matrix(A), permc_spec="COLAMD")
                x = _refine(A, lu, lu.solve(rhs_solve), rhs_solve, tol, report)
            elif backend == "iterative":
                x = _iterative(A, rhs_solve, tol, "general", report)
            elif backend == "recycle":
                recycler = recycler if recycler is not None else Recycler()
                x, rep = recycler.solve(A, rhs_solve, tol)
                report.iterations = rep.iterations
                report.history.extend(rep.history)
            else:
                raise ValueError(f"unknown backend {backend!r}")
        except RuntimeError as exc:
            if isinstance(exc, SolveError):
                raise
            report.residual_norm = float("inf")
            raise SolveError(f"saddle solve failed: {exc}", report) from exc

    u, p = x[:n], x[n:]
    if mean_weights is not None:
        p = p - mean_weights @ p / mean_weights.sum()
    x = np.concatenate([u, p])
    report.wall_time = time.perf_counter() - t0
    _check(A_full, x, rhs, tol, report, "saddle solve")
    return u, p, report


class SaddleFactorization:
    """Cached LU of a constant saddle-point matrix (e.g. the Leray-alpha filter)."""

    def __init__(self, F, B, fixed=None, mean_weights=None, tol: float = 1e-10):
        self.F = sp.csr_matrix(F)
        self.B = sp.csr_matrix(B)
        self.n, self.m = self.F.shape[0], self.B.shape[0]
        self.fixed = np.asarray([] if fixed is None else fixed, dtype=np.int64)
        self.mean_weights = None if mean_weights is None else np.asarray(mean_weights, float)
        self.pin = None if mean_weights is None else int(np.argmax(np.abs(self.mean_weights)))
        self.tol = tol
        self.A_full = saddle_matrix(self.F, self.B, self.fixed)
        A = self.A_full if self.pin is None else saddle_matrix(self.F, self.B, self.fixed, self.pin)
        self.A = A
        try:
            self.lu = spla.splu(sp.csc_matrix(A), permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SolveError(f"saddle factorization failed: {exc}") from exc

    def solve(self, f, g=None, fixed_values=None):
        t0 = time.perf_counter()
        n, m = self.n, self.m
        f = np.array(f, dtype=float)
        g = np.zeros(m) if g is None else np.array(g, dtype=float)
        if len(self.fixed):
            ub = np.zeros(n)
            ub[self.fixed] = 0.0 if fixed_values is None else fixed_values
            f -= self.F @ ub
            g -= self.B @ ub
            f[self.fixed] = ub[self.fixed]
        rhs = np.concatenate([f, g])
        rhs_solve = rhs.copy()
        if self.pin is not None:
            rhs_solve[n + self.pin] = 0.0
        report = SolveReport("direct", 0.0, 0.0, "direct")
        if np.any(rhs):
            x = _refine(self.A, self.lu, self.lu.solve(rhs_solve), rhs_solve, self.tol, report)
        else:
            x = np.zeros(n + m)
        u, p = x[:n], x[n:]
        if self.mean_weights is not None:
            p = p - self.mean_weights @ p / self.mean_weights.sum()
        report.wall_time = time.perf_counter() - t0
        _check(self.A_full, np.concatenate([u, p]), rhs, self.tol, report, "saddle solve")
        return u, p, report
