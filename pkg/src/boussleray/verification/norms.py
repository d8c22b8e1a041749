"""Error norms against closed-form solutions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..fem import Field
from ..fem.quadrature import triangle_rule


def _rule(space, extra: int = 4):
    return triangle_rule(space.quad_order + extra)


def l2_error(numeric: Field, exact, t: float) -> float:
    """``||exact(., t) - numeric||_{L2}`` with a raised-order quadrature rule.

    ``exact(x, y, t)`` returns an array, or a tuple for vector fields.
    """
    space = numeric.space
    rule = _rule(space)
    _, _, wdet = space.tabulate(rule)
    xq = space.quadrature_points(rule)
    ex = exact(xq[..., 0], xq[..., 1], t)
    vals = numeric.at_quadrature(rule)
    if numeric.components == 1:
        return float(np.sqrt(np.sum(wdet * (vals - ex) ** 2)))
    total = sum(np.sum(wdet * (vals[..., c] - ex[c]) ** 2) for c in range(numeric.components))
    return float(np.sqrt(total))


def h1_seminorm_error(numeric: Field, exact_grad, t: float) -> float:
    """``||grad(exact - numeric)||_{L2}``.

    ``exact_grad(x, y, t)`` returns ``(gx, gy)`` for scalars and a tuple of
    such pairs, one per component, for vector fields.
    """
    space = numeric.space
    rule = _rule(space)
    _, _, wdet = space.tabulate(rule)
    xq = space.quadrature_points(rule)
    ex = exact_grad(xq[..., 0], xq[..., 1], t)
    g = numeric.gradient_at_quadrature(rule)
    if numeric.components == 1:
        ex, g = (ex,), g[:, :, None, :]
    total = 0.0
    for c, pair in enumerate(ex):
        for d in range(2):
            total += np.sum(wdet * (g[:, :, c, d] - pair[d]) ** 2)
    return float(np.sqrt(total))


@dataclass
class ErrorNorms:
    """Final-time L2 errors and the accumulated ``|||.|||_{2,1}`` errors."""

    dt: float
    sum_u: float = 0.0
    sum_T: float = 0.0
    steps: list = field(default_factory=list)
    err_u_L2: float = float("nan")
    err_T_L2: float = float("nan")

    def add_step(self, n: int, u: Field, T: Field, exact, t: float):
        """Accumulate ``dt * ||grad(e^{n})||^2`` for one time level."""
        self.sum_u += self.dt * h1_seminorm_error(u, exact.grad_u, t) ** 2
        self.sum_T += self.dt * h1_seminorm_error(T, exact.grad_T, t) ** 2
        self.steps.append(n)

    def finalize(self, u: Field, T: Field, exact, t: float, n_expected: int | None = None):
        if n_expected is not None and len(self.steps) != n_expected:
            raise ValueError(f"expected {n_expected} accumulated levels, got {len(self.steps)}")
        self.err_u_L2 = l2_error(u, exact.u, t)
        self.err_T_L2 = l2_error(T, exact.T, t)
        return self

    @property
    def err_u_21(self) -> float:
        return float(np.sqrt(self.sum_u))

    @property
    def err_T_21(self) -> float:
        return float(np.sqrt(self.sum_T))

    def as_tuple(self):
        return (self.err_u_L2, self.err_u_21, self.err_T_L2, self.err_T_21)


def compute_error_norms(trajectory, exact, dt: float) -> ErrorNorms:
    """Norms of a stored trajectory ``[(n, t, u, T), ...]`` covering levels 1..M.

    The ``|||.|||_{2,1}`` sum runs over every stored level; the L2 errors use
    the last one.
    """
    if not trajectory:
        raise ValueError("empty trajectory")
    levels = [n for n, *_ in trajectory]
    if levels != list(range(levels[0], levels[0] + len(levels))):
        raise ValueError("trajectory has missing levels")
    out = ErrorNorms(dt)
    for n, t, u, T in trajectory:
        out.add_step(n, u, T, exact, t)
    n, t, u, T = trajectory[-1]
    return out.finalize(u, T, exact, t)
