"""Shared builders and independent reference implementations.

The reference functions here deliberately recompute quantities with
dense, loop-style formulas so package results can be checked against
structurally different code.
"""

from __future__ import annotations

import numpy as np

from mvtsk.data import MaskSpec, SplitSpec, generate_mask, generate_split
from mvtsk.datasets import make_synthetic_blobs


def make_toy_dataset():
    """Small 3-view problem used by the solver property suites.

    12 instances, 2 classes, 30% of rows missing per view, half the
    instances labeled.  All randomness is pinned.
    """
    ds = make_synthetic_blobs(
        12, n_views=3, n_classes=2, dim_per_view=3, separation=2.0, seed=0
    )
    ds = generate_mask(ds, MaskSpec([0.3, 0.3, 0.3], seed=1))
    ds = generate_split(ds, SplitSpec(0.5, seed=2))
    return ds


def make_blob_problem(
    n,
    missing,
    labeled,
    n_views=2,
    n_classes=3,
    dim_per_view=8,
    separation=3.0,
    data_seed=0,
    mask_seed=1,
    split_seed=2,
):
    """Blob dataset with a generated mask and stratified split."""
    ds = make_synthetic_blobs(
        n,
        n_views=n_views,
        n_classes=n_classes,
        dim_per_view=dim_per_view,
        separation=separation,
        seed=data_seed,
    )
    if missing > 0:
        ds = generate_mask(ds, MaskSpec([missing] * n_views, seed=mask_seed))
    ds = generate_split(ds, SplitSpec(labeled, seed=split_seed))
    return ds


def pairwise_sq(a, b):
    """Dense ||a_i - b_j||^2 via explicit broadcasting (reference path)."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sum(diff * diff, axis=2)


def reference_objective(tr):
    """Objective terms recomputed densely from a Trainer's live state.

    Returns (gamma, delta, theta).  Used as the independent oracle for
    objective values and finite-difference gradients.
    """
    hp = tr.hp
    g = tr.graphs
    a = np.asarray(tr.a, dtype=float)
    yt = tr.ytilde
    nv = tr.n_views
    u = [(tr.design[v] + tr.H[v]) @ tr.P[v] for v in range(nv)]

    gamma = 0.0
    for v in range(nv):
        resid = u[v] - yt
        gamma += a[v] * float(np.sum(tr.wsq[v][:, None] * resid * resid))
        gamma += hp.beta1 * float(np.sum(tr.P[v] * tr.P[v]))
    gamma += hp.beta2 * float(sum(av * np.log(av) for av in a if av > 0))

    delta = 0.0
    z = g.z.toarray()
    for v in range(nv):
        delta += hp.beta3 * float(np.sum(z * pairwise_sq(u[v], u[v])))
    yu = yt[tr.ds.unlabeled_idx]
    for v in range(nv):
        s = g.s_unl[v].toarray()
        delta += hp.beta4 * float(np.sum(s * pairwise_sq(yu, yu)))

    theta = 0.0
    if nv > 1 and hp.beta5 > 0:
        for v in range(nv):
            b = sum(a[t] * u[t] for t in range(nv) if t != v)
            s = g.s_all[v].toarray()
            theta += hp.beta5 * float(np.sum(s * pairwise_sq(u[v], b)))
    return gamma, delta, theta


def reference_objective_total(tr):
    return float(sum(reference_objective(tr)))


def _column_knn(d2, k):
    """Smallest-k row indices per column, stable ties, no self edges."""
    n = d2.shape[0]
    hits = np.zeros((n, n), dtype=bool)
    for j in range(n):
        cand = [(d2[i, j], i) for i in range(n) if i != j]
        cand.sort(key=lambda t: (t[0], t[1]))
        for _, i in cand[:k]:
            hits[i, j] = True
    return hits


def _kernel_sigma(d2, hits):
    vals = np.sqrt(d2[hits])
    vals = vals[vals > 0]
    return float(np.median(vals)) if vals.size else 1.0


def brute_force_instance_graph(points, valid, k):
    """Dense reference for the per-view instance similarity graph.

    kNN per column over all rows, Gaussian kernel with the median
    positive kNN distance as bandwidth, edges kept only when at least
    one endpoint is observed, symmetrized by elementwise max.
    """
    points = np.asarray(points, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    n = points.shape[0]
    d2 = pairwise_sq(points, points)
    hits = _column_knn(d2, k)
    sigma = _kernel_sigma(d2, hits)
    out = np.zeros((n, n))
    for j in range(n):
        for i in range(n):
            if hits[i, j] and (valid[i] or valid[j]):
                out[i, j] = np.exp(-d2[i, j] / (2.0 * sigma * sigma))
    return np.maximum(out, out.T)


def brute_force_label_graph(label_matrix, true_mask, labels, k):
    """Dense reference for the label-similarity graph.

    Same-class true-label pairs get exact 1; other pairs get kernel kNN
    edges in label space (k nearest per column over all rows, gate: not
    both endpoints true-labeled), symmetrized by max.
    """
    y = np.asarray(label_matrix, dtype=float)
    true_mask = np.asarray(true_mask, dtype=bool)
    n = y.shape[0]
    d2 = pairwise_sq(y, y)
    hits = _column_knn(d2, k)
    sigma = _kernel_sigma(d2, hits)
    out = np.zeros((n, n))
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            if hits[i, j] and not (true_mask[i] and true_mask[j]):
                out[i, j] = np.exp(-d2[i, j] / (2.0 * sigma * sigma))
    out = np.maximum(out, out.T)
    for i in range(n):
        for j in range(n):
            if i != j and true_mask[i] and true_mask[j] and labels[i] == labels[j]:
                out[i, j] = 1.0
    return out


def central_difference(f, x, step=1e-6):
    """Central-difference gradient of scalar f at 1-D point x."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        forward = x.copy()
        backward = x.copy()
        forward[i] += step
        backward[i] -= step
        grad[i] = (f(forward) - f(backward)) / (2.0 * step)
    return grad
