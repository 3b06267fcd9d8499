# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled row-sweep kernels.

Semantics mirror mvtsk._kernels_py exactly (same update order, guards,
and tie handling); only floating-point summation order may differ.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "compiled"

cdef double _TINY = 1e-300


cdef void _project_simplex(double[::1] v, double[::1] buf, Py_ssize_t c) noexcept:
    """In-place Euclidean projection of v onto the probability simplex."""
    cdef Py_ssize_t i, j, rho
    cdef double key, css, tau
    for i in range(c):
        buf[i] = v[i]
    # insertion sort, descending
    for i in range(1, c):
        key = buf[i]
        j = i - 1
        while j >= 0 and buf[j] < key:
            buf[j + 1] = buf[j]
            j -= 1
        buf[j + 1] = key
    css = 0.0
    rho = 0
    tau = 0.0
    for i in range(c):
        css += buf[i]
        if buf[i] * (i + 1) > css - 1.0:
            rho = i + 1
            tau = (css - 1.0) / rho
    for i in range(c):
        v[i] = v[i] - tau
        if v[i] < 0.0:
            v[i] = 0.0


def error_row_sweep(
    double[:, ::1] H,
    double[:, ::1] U,
    double[:, ::1] P,
    double[:, ::1] Pdag,
    double[:, ::1] ytilde,
    cnp.int64_t[::1] miss_rows,
    double[::1] wsq,
    double a_v,
    double beta3,
    double beta5,
    cnp.int64_t[::1] z_indptr,
    cnp.int64_t[::1] z_indices,
    double[::1] z_data,
    cnp.int64_t[::1] s_indptr,
    cnp.int64_t[::1] s_indices,
    double[::1] s_data,
    double[::1] s_rowsum,
    double[:, ::1] B,
    double[:, ::1] G,
    double[::1] gcol,
    bint theta_on,
):
    """One Gauss-Seidel sweep over a view's missing rows, in place."""
    cdef Py_ssize_t n_classes = U.shape[1]
    cdef Py_ssize_t dg = H.shape[1]
    cdef Py_ssize_t ridx, c, d
    cdef cnp.int64_t i, j, p
    cdef double alpha, w, zsum, acc, inv
    t_arr = np.empty(n_classes)
    cdef double[::1] t = t_arr
    for ridx in range(miss_rows.shape[0]):
        i = miss_rows[ridx]
        alpha = a_v * wsq[i]
        for c in range(n_classes):
            t[c] = a_v * wsq[i] * ytilde[i, c]
        if beta3 > 0.0:
            zsum = 0.0
            for p in range(z_indptr[i], z_indptr[i + 1]):
                j = z_indices[p]
                w = z_data[p]
                zsum += w
                for c in range(n_classes):
                    t[c] += 2.0 * beta3 * w * U[j, c]
            alpha += 2.0 * beta3 * zsum
        if theta_on:
            alpha += beta5 * s_rowsum[i] + beta5 * a_v * a_v * gcol[i]
            for p in range(s_indptr[i], s_indptr[i + 1]):
                j = s_indices[p]
                w = s_data[p]
                for c in range(n_classes):
                    t[c] += beta5 * w * B[j, c]
            for c in range(n_classes):
                t[c] += beta5 * a_v * G[i, c]
        if alpha <= _TINY:
            continue
        inv = 1.0 / alpha
        for d in range(dg):
            acc = 0.0
            for c in range(n_classes):
                acc += (t[c] * inv) * Pdag[c, d]
            H[i, d] = acc
        for c in range(n_classes):
            acc = 0.0
            for d in range(dg):
                acc += H[i, d] * P[d, c]
            U[i, c] = acc


def pseudo_row_sweep(
    double[:, ::1] Y,
    cnp.int64_t[::1] rows_global,
    double[:, :, ::1] U_stack,
    double[:, ::1] wsq_stack,
    double[::1] a,
    double beta4,
    cnp.int64_t[:, ::1] su_indptr,
    cnp.int64_t[::1] su_indices,
    double[::1] su_data,
    cnp.int64_t[::1] su_offsets,
    double[:, ::1] su_rowsum,
    cnp.int64_t[::1] rows_local,
):
    """One Gauss-Seidel sweep over unlabeled pseudo-label rows, in place."""
    cdef Py_ssize_t n_views = U_stack.shape[0]
    cdef Py_ssize_t n_classes = Y.shape[1]
    cdef Py_ssize_t rr, v, c
    cdef cnp.int64_t r, i, p, j, g, lo, hi
    cdef double theta, av_w, w
    f_arr = np.empty(n_classes)
    buf_arr = np.empty(n_classes)
    cdef double[::1] f = f_arr
    cdef double[::1] buf = buf_arr
    for rr in range(rows_local.shape[0]):
        r = rows_local[rr]
        i = rows_global[r]
        theta = 0.0
        for c in range(n_classes):
            f[c] = 0.0
        for v in range(n_views):
            av_w = a[v] * wsq_stack[v, i]
            theta += av_w
            for c in range(n_classes):
                f[c] += av_w * U_stack[v, i, c]
            if beta4 > 0.0:
                theta += 2.0 * beta4 * su_rowsum[v, r]
                lo = su_indptr[v, r] + su_offsets[v]
                hi = su_indptr[v, r + 1] + su_offsets[v]
                for p in range(lo, hi):
                    j = su_indices[p]
                    w = su_data[p]
                    g = rows_global[j]
                    for c in range(n_classes):
                        f[c] += 2.0 * beta4 * w * Y[g, c]
        if theta <= _TINY:
            continue
        for c in range(n_classes):
            f[c] /= theta
        _project_simplex(f, buf, n_classes)
        for c in range(n_classes):
            Y[i, c] = f[c]
