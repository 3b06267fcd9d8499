"""Sparse kNN similarity graphs over instances and over label vectors.

All graphs use a Gaussian kernel ``exp(-d^2 / (2 sigma^2))`` whose
bandwidth ``sigma`` is the median of the graph's positive kNN distances
(1.0 when every kNN distance is zero).  Directed kNN edges are ranked by
(distance, index) for determinism and symmetrized by elementwise
maximum, so the initial edge direction convention does not affect the
result.  Graphs have no self loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp


def pairwise_sq_dists(x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    """Dense squared Euclidean distances, clipped at zero.

    Returns (N, M) for x of shape (N, d) and y of shape (M, d); y
    defaults to x.
    """
    x = np.asarray(x, dtype=np.float64)
    y = x if y is None else np.asarray(y, dtype=np.float64)
    xx = np.einsum("ij,ij->i", x, x)
    yy = np.einsum("ij,ij->i", y, y)
    d2 = xx[:, None] + yy[None, :] - 2.0 * (x @ y.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _knn_edges(d2: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Directed kNN edge list (src, dst, sq_dist) from a square distance matrix.

    For each column j the k nearest rows i != j become edges (i, j).
    Ties are broken by the lower row index (stable sort).
    """
    n = d2.shape[0]
    work = d2.copy()
    np.fill_diagonal(work, np.inf)
    order = np.argsort(work, axis=0, kind="stable")[:k, :]
    dst = np.repeat(np.arange(n), k)
    src = order.T.reshape(-1)
    return src, dst, d2[src, dst]


def _kernel_values(sq_dists: np.ndarray) -> np.ndarray:
    """Gaussian kernel with median-of-positive-distances bandwidth."""
    dists = np.sqrt(sq_dists)
    pos = dists[dists > 0]
    sigma = float(np.median(pos)) if pos.size else 1.0
    return np.exp(-sq_dists / (2.0 * sigma * sigma))


def _assemble(src, dst, vals, n) -> sp.csr_matrix:
    s = sp.coo_matrix((vals, (src, dst)), shape=(n, n)).tocsr()
    s = s.maximum(s.T)
    s.eliminate_zeros()
    s.sort_indices()
    return s


def build_instance_similarity(points: np.ndarray, valid: np.ndarray, k: int) -> sp.csr_matrix:
    """Symmetric kNN kernel graph over instance rows.

    Neighbors are ranked over all rows (missing rows carry their
    placeholder-imputed values); an edge is kept only when at least one
    endpoint is observed per ``valid``.  Raises ValueError unless
    ``1 <= k < N``.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < N={n}, got {k}")
    valid = np.asarray(valid, dtype=bool)
    if valid.shape != (n,):
        raise ValueError(f"valid must be length {n}")
    src, dst, sq = _knn_edges(pairwise_sq_dists(points), k)
    vals = _kernel_values(sq)
    keep = valid[src] | valid[dst]
    return _assemble(src[keep], dst[keep], vals[keep], n)


def build_label_similarity(
    label_matrix: np.ndarray,
    true_mask: np.ndarray,
    labels: np.ndarray,
    k: int,
) -> sp.csr_matrix:
    """Symmetric similarity over label vectors.

    Pairs of true-labeled instances of the same class get weight exactly
    1.  Other pairs get a Gaussian-kernel weight when one is a kNN of
    the other in label space; pairs of two true-labeled instances never
    use the kernel branch.  Raises ValueError unless ``1 <= k < N``.
    """
    y = np.asarray(label_matrix, dtype=np.float64)
    n = y.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < N={n}, got {k}")
    true_mask = np.asarray(true_mask, dtype=bool)
    labels = np.asarray(labels)
    src, dst, sq = _knn_edges(pairwise_sq_dists(y), k)
    vals = _kernel_values(sq)
    keep = ~(true_mask[src] & true_mask[dst])
    parts_src = [src[keep]]
    parts_dst = [dst[keep]]
    parts_val = [vals[keep]]
    for c in np.unique(labels[true_mask]):
        rows = np.flatnonzero(true_mask & (labels == c))
        if rows.size < 2:
            continue
        a = np.repeat(rows, rows.size)
        b = np.tile(rows, rows.size)
        offdiag = a != b
        parts_src.append(a[offdiag])
        parts_dst.append(b[offdiag])
        parts_val.append(np.ones(int(offdiag.sum())))
    src_all = np.concatenate(parts_src)
    dst_all = np.concatenate(parts_dst)
    val_all = np.concatenate(parts_val)
    return _assemble(src_all, dst_all, val_all, n)


@dataclass
class SimilarityGraphs:
    """Graphs used by one optimization iteration.

    ``s_all[v]`` spans all N instances of view v; ``s_unl[v]`` spans the
    unlabeled subset only (indices local to ``unlabeled_idx`` order);
    ``z`` spans all N label vectors.
    """

    s_all: list[sp.csr_matrix]
    s_unl: list[sp.csr_matrix]
    z: sp.csr_matrix
    k: int


def build_graphs(
    imputed_views: Sequence[np.ndarray],
    mask: np.ndarray,
    label_matrix: np.ndarray,
    true_mask: np.ndarray,
    labels: np.ndarray,
    unlabeled_idx: np.ndarray,
    k: int,
) -> SimilarityGraphs:
    """Build all per-view and label-space graphs for the current state.

    ``k`` is clamped to ``rows - 1`` for graphs over fewer than ``k + 1``
    rows; a graph over fewer than two rows is empty.
    """
    n = mask.shape[0]
    s_all = []
    s_unl = []
    for v, q in enumerate(imputed_views):
        kv = min(k, n - 1)
        s_all.append(build_instance_similarity(q, mask[:, v], kv))
        nu = unlabeled_idx.size
        if nu < 2:
            s_unl.append(sp.csr_matrix((nu, nu)))
        else:
            ku = min(k, nu - 1)
            s_unl.append(
                build_instance_similarity(q[unlabeled_idx], mask[unlabeled_idx, v], ku)
            )
    z = build_label_similarity(label_matrix, true_mask, labels, min(k, n - 1))
    return SimilarityGraphs(s_all=s_all, s_unl=s_unl, z=z, k=k)


def graph_to_coo_array(s: sp.csr_matrix) -> np.ndarray:
    """Edge list (row, col, value) as an (nnz, 3) float array, row-major order."""
    coo = s.tocoo()
    order = np.lexsort((coo.col, coo.row))
    return np.column_stack(
        [coo.row[order].astype(np.float64), coo.col[order].astype(np.float64), coo.data[order]]
    )
