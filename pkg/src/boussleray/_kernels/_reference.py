"""Pure-numpy element kernels.

Shapes: ``phi`` (nq, nl), ``grads`` (nt, nq, nl, 2), ``wdet`` (nt, nq).
Local matrices are indexed ``[e, test, trial]``.
"""

import numpy as np

BACKEND = "numpy"


def element_mass(phi, wdet):
    return np.einsum("eq,qi,qj->eij", wdet, phi, phi, optimize=True)


def element_stiffness(grads, wdet):
    return np.einsum("eq,eqid,eqjd->eij", wdet, grads, grads, optimize=True)


def element_convection(phi, grads, wind, wdet):
    # 1/2 [ (w . grad phi_j) phi_i - (w . grad phi_i) phi_j ]
    wg = np.einsum("eqd,eqnd->eqn", wind, grads)
    half = np.einsum("eq,eqj,qi->eij", wdet, wg, phi, optimize=True)
    return 0.5 * (half - half.transpose(0, 2, 1))


def element_mixed(phi_test, grads_trial, wdet):
    """Local ``int psi_i d(phi_j)/dx_d``, shape (nt, nl_test, nl_trial, 2)."""
    return np.einsum("eq,qi,eqjd->eijd", wdet, phi_test, grads_trial, optimize=True)


def element_load(phi, fvals, wdet):
    return np.einsum("eq,qi->ei", wdet * fvals, phi)


def scatter_add(index, values, n):
    return np.bincount(index.ravel(), weights=values.ravel(), minlength=n)


def evaluate_local(phi, local_coeffs):
    """Values at quadrature points from per-element coefficients (nt, nl)."""
    return local_coeffs @ phi.T
