# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled element kernels; same contracts as ``_reference``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def element_mass(const double[:, ::1] phi, const double[:, ::1] wdet):
    cdef Py_ssize_t ne = wdet.shape[0], nq = wdet.shape[1], nl = phi.shape[1]
    cdef Py_ssize_t e, q, i, j
    cdef double w, wi
    out_arr = np.zeros((ne, nl, nl))
    cdef double[:, :, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            w = wdet[e, q]
            for i in range(nl):
                wi = w * phi[q, i]
                for j in range(i, nl):
                    out[e, i, j] += wi * phi[q, j]
        for i in range(nl):
            for j in range(i):
                out[e, i, j] = out[e, j, i]
    return out_arr


def element_stiffness(const double[:, :, :, ::1] grads, const double[:, ::1] wdet):
    cdef Py_ssize_t ne = grads.shape[0], nq = grads.shape[1], nl = grads.shape[2]
    cdef Py_ssize_t e, q, i, j
    cdef double w, gx, gy
    out_arr = np.zeros((ne, nl, nl))
    cdef double[:, :, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            w = wdet[e, q]
            if w == 0.0:
                continue
            for i in range(nl):
                gx = w * grads[e, q, i, 0]
                gy = w * grads[e, q, i, 1]
                for j in range(i, nl):
                    out[e, i, j] += gx * grads[e, q, j, 0] + gy * grads[e, q, j, 1]
        for i in range(nl):
            for j in range(i):
                out[e, i, j] = out[e, j, i]
    return out_arr


def element_convection(const double[:, ::1] phi, const double[:, :, :, ::1] grads,
                       const double[:, :, ::1] wind, const double[:, ::1] wdet):
    cdef Py_ssize_t ne = grads.shape[0], nq = grads.shape[1], nl = grads.shape[2]
    cdef Py_ssize_t e, q, i, j
    cdef double w, wx, wy, v
    cdef double wg[16]
    out_arr = np.zeros((ne, nl, nl))
    cdef double[:, :, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            w = 0.5 * wdet[e, q]
            wx = wind[e, q, 0]
            wy = wind[e, q, 1]
            for j in range(nl):
                wg[j] = w * (wx * grads[e, q, j, 0] + wy * grads[e, q, j, 1])
            for i in range(nl):
                for j in range(i + 1, nl):
                    v = wg[j] * phi[q, i] - wg[i] * phi[q, j]
                    out[e, i, j] += v
                    out[e, j, i] -= v
    return out_arr


def element_mixed(const double[:, ::1] phi_test, const double[:, :, :, ::1] grads_trial,
                  const double[:, ::1] wdet):
    cdef Py_ssize_t ne = grads_trial.shape[0], nq = grads_trial.shape[1]
    cdef Py_ssize_t nlt = phi_test.shape[1], nl = grads_trial.shape[2]
    cdef Py_ssize_t e, q, i, j
    cdef double wi
    out_arr = np.zeros((ne, nlt, nl, 2))
    cdef double[:, :, :, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            for i in range(nlt):
                wi = wdet[e, q] * phi_test[q, i]
                for j in range(nl):
                    out[e, i, j, 0] += wi * grads_trial[e, q, j, 0]
                    out[e, i, j, 1] += wi * grads_trial[e, q, j, 1]
    return out_arr


def element_load(const double[:, ::1] phi, const double[:, ::1] fvals, const double[:, ::1] wdet):
    cdef Py_ssize_t ne = wdet.shape[0], nq = wdet.shape[1], nl = phi.shape[1]
    cdef Py_ssize_t e, q, i
    cdef double w
    out_arr = np.zeros((ne, nl))
    cdef double[:, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            w = wdet[e, q] * fvals[e, q]
            for i in range(nl):
                out[e, i] += w * phi[q, i]
    return out_arr


def scatter_add(index, values, Py_ssize_t n):
    cdef const cnp.int64_t[::1] idx = np.ascontiguousarray(index, dtype=np.int64).ravel()
    cdef const double[::1] val = np.ascontiguousarray(values, dtype=float).ravel()
    cdef Py_ssize_t k, m = idx.shape[0]
    out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    for k in range(m):
        out[idx[k]] += val[k]
    return out_arr


def evaluate_local(const double[:, ::1] phi, const double[:, ::1] local_coeffs):
    cdef Py_ssize_t ne = local_coeffs.shape[0], nl = local_coeffs.shape[1], nq = phi.shape[0]
    cdef Py_ssize_t e, q, i
    cdef double s
    out_arr = np.empty((ne, nq))
    cdef double[:, ::1] out = out_arr
    for e in range(ne):
        for q in range(nq):
            s = 0.0
            for i in range(nl):
                s += phi[q, i] * local_coeffs[e, i]
            out[e, q] = s
    return out_arr
