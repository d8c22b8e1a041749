"""Manufactured solution used for the convergence studies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..stepper import Forcing


@dataclass(frozen=True)
class MmsProblem:
    """Closed-form velocity, pressure and temperature on the unit square.

    ``u = (e^t cos(pi(y - t)), e^t sin(pi(x + t)))``,
    ``p = sin(x + y)(1 + t^2)`` and ``T = sin(pi x) + y e^t``. The forcings
    make these satisfy the Boussinesq system exactly for the given
    parameters.
    """

    Re: float = 1.0
    Ri: float = 1.0
    Pr: float = 1.0

    # -- exact fields -----------------------------------------------------
    @staticmethod
    def u(x, y, t):
        e = np.exp(t)
        return e * np.cos(np.pi * (y - t)), e * np.sin(np.pi * (x + t))

    @staticmethod
    def p(x, y, t):
        return np.sin(x + y) * (1.0 + t**2)

    @staticmethod
    def T(x, y, t):
        return np.sin(np.pi * x) + y * np.exp(t)

    @staticmethod
    def grad_u(x, y, t):
        """((du1/dx, du1/dy), (du2/dx, du2/dy))."""
        e = np.exp(t)
        z = np.zeros_like(np.asarray(x + y, dtype=float))
        return (
            (z, -np.pi * e * np.sin(np.pi * (y - t))),
            (np.pi * e * np.cos(np.pi * (x + t)), z),
        )

    @staticmethod
    def grad_T(x, y, t):
        return np.pi * np.cos(np.pi * x) + 0.0 * y, np.exp(t) + 0.0 * x

    # -- forcings ---------------------------------------------------------
    def f(self, x, y, t):
        e = np.exp(t)
        pi = np.pi
        cy, sy = np.cos(pi * (y - t)), np.sin(pi * (y - t))
        cx, sx = np.cos(pi * (x + t)), np.sin(pi * (x + t))
        gp = np.cos(x + y) * (1.0 + t**2)
        visc = pi**2 / self.Re
        f1 = e * cy + pi * e * sy - pi * e * e * sx * sy + visc * e * cy + gp
        f2 = (
            e * sx + pi * e * cx + pi * e * e * cy * cx + visc * e * sx + gp
            - self.Ri * self.T(x, y, t)
        )
        return f1, f2

    def gamma(self, x, y, t):
        e = np.exp(t)
        u1, u2 = self.u(x, y, t)
        return (
            y * e + u1 * np.pi * np.cos(np.pi * x) + u2 * e
            + np.pi**2 * np.sin(np.pi * x) / (self.Re * self.Pr)
        )

    def forcing(self) -> Forcing:
        return Forcing(f=self.f, gamma=self.gamma, u_bc=self.u, T_bc=self.T)

    def ic_u(self, x, y):
        return self.u(x, y, 0.0)

    def ic_T(self, x, y):
        return self.T(x, y, 0.0)
