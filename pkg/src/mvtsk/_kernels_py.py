"""Pure-NumPy fallback implementations of the sequential row-sweep kernels.

These mirror the compiled extension exactly: same update order, same
guards, same tie handling.  Both backends perform Gauss-Seidel sweeps,
reading neighbor rows at their current (already updated) values.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

_TINY = 1e-300


def simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex.

    Sort-based algorithm; output is nonnegative and sums to one.
    """
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    j = np.arange(1, v.size + 1)
    rho = np.max(np.flatnonzero(u * j > css)) + 1
    tau = css[rho - 1] / rho
    return np.maximum(v - tau, 0.0)


def error_row_sweep(
    H: np.ndarray,
    U: np.ndarray,
    P: np.ndarray,
    Pdag: np.ndarray,
    ytilde: np.ndarray,
    miss_rows: np.ndarray,
    wsq: np.ndarray,
    a_v: float,
    beta3: float,
    beta5: float,
    z_indptr: np.ndarray,
    z_indices: np.ndarray,
    z_data: np.ndarray,
    s_indptr: np.ndarray,
    s_indices: np.ndarray,
    s_data: np.ndarray,
    s_rowsum: np.ndarray,
    B: np.ndarray,
    G: np.ndarray,
    gcol: np.ndarray,
    theta_on: bool,
) -> None:
    """One Gauss-Seidel sweep over a view's missing rows, in place.

    For each missing row i the quadratic row subproblem in the model
    output u is minimized in closed form, then mapped back to an error
    row through the damped pseudo-inverse ``Pdag`` and re-expressed as
    an output row ``U[i] = H[i] @ P``.  Rows whose quadratic coefficient
    vanishes are left unchanged.
    """
    for i in miss_rows:
        alpha = a_v * wsq[i]
        t = a_v * wsq[i] * ytilde[i]
        if beta3 > 0.0:
            lo, hi = z_indptr[i], z_indptr[i + 1]
            if hi > lo:
                cols = z_indices[lo:hi]
                w = z_data[lo:hi]
                alpha += 2.0 * beta3 * w.sum()
                t = t + 2.0 * beta3 * (w @ U[cols])
        if theta_on:
            alpha += beta5 * s_rowsum[i] + beta5 * a_v * a_v * gcol[i]
            lo, hi = s_indptr[i], s_indptr[i + 1]
            if hi > lo:
                cols = s_indices[lo:hi]
                w = s_data[lo:hi]
                t = t + beta5 * (w @ B[cols])
            t = t + beta5 * a_v * G[i]
        if alpha <= _TINY:
            continue
        u_star = t / alpha
        h = u_star @ Pdag
        H[i] = h
        U[i] = h @ P


def pseudo_row_sweep(
    Y: np.ndarray,
    rows_global: np.ndarray,
    U_stack: np.ndarray,
    wsq_stack: np.ndarray,
    a: np.ndarray,
    beta4: float,
    su_indptr: np.ndarray,
    su_indices: np.ndarray,
    su_data: np.ndarray,
    su_offsets: np.ndarray,
    su_rowsum: np.ndarray,
    rows_local: np.ndarray,
) -> None:
    """One Gauss-Seidel sweep over unlabeled pseudo-label rows, in place.

    ``rows_global[r]`` maps local unlabeled index r to its global row in
    ``Y``; ``rows_local`` lists the local indices to update, in order.
    The per-view unlabeled graphs arrive as stacked CSR arrays:
    ``su_indptr`` is (V, Nu+1) with values relative to ``su_offsets[v]``
    into the concatenated ``su_indices``/``su_data``.  Each row solution
    is projected onto the probability simplex.  Rows with zero quadratic
    coefficient are left unchanged.
    """
    n_views = U_stack.shape[0]
    n_classes = Y.shape[1]
    for r in rows_local:
        i = rows_global[r]
        theta = 0.0
        f = np.zeros(n_classes)
        for v in range(n_views):
            av_w = a[v] * wsq_stack[v, i]
            theta += av_w
            f += av_w * U_stack[v, i]
            if beta4 > 0.0:
                theta += 2.0 * beta4 * su_rowsum[v, r]
                lo = su_indptr[v, r] + su_offsets[v]
                hi = su_indptr[v, r + 1] + su_offsets[v]
                if hi > lo:
                    cols = su_indices[lo:hi]
                    w = su_data[lo:hi]
                    f += 2.0 * beta4 * (w @ Y[rows_global[cols]])
        if theta <= _TINY:
            continue
        Y[i] = simplex_project(f / theta)
