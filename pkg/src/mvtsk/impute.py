"""kNN imputation baseline for missing view rows.

Distances between instances are accumulated over the views both
instances share, each view's squared Euclidean distance divided by that
view's dimension.  A missing row is filled from the k nearest candidate
rows observed in the target view, by uniform or inverse-distance
weighted mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import MultiViewDataset


@dataclass
class ImputeSpec:
    """Neighbor count and weighting scheme (``uniform`` | ``inverse``)."""

    k: int = 5
    weighting: str = "uniform"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.weighting not in ("uniform", "inverse"):
            raise ValueError(f"weighting must be uniform or inverse, got {self.weighting!r}")


def _shared_view_distances(dataset: MultiViewDataset) -> np.ndarray:
    """(N, N) distance matrix over shared observed views.

    Pairs sharing no observed view get +inf.  Each view contributes its
    squared Euclidean distance divided by its dimension.
    """
    n = dataset.n_instances
    total = np.zeros((n, n))
    shared = np.zeros((n, n), dtype=np.int64)
    for v, x in enumerate(dataset.views):
        obs = dataset.mask[:, v].astype(np.float64)
        pair_obs = np.outer(obs, obs)
        sq = np.einsum("ij,ij->i", x, x)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
        np.maximum(d2, 0.0, out=d2)
        total += pair_obs * d2 / x.shape[1]
        shared += pair_obs.astype(np.int64)
    total[shared == 0] = np.inf
    return total


def _neighbor_fill(
    values: np.ndarray, dists: np.ndarray, k: int, weighting: str
) -> np.ndarray:
    """Weighted mean of the k nearest rows; ties by lower index.

    With inverse weighting, zero-distance neighbors (if any) share a
    uniform average and dominate the rest.
    """
    order = np.argsort(dists, kind="stable")[:k]
    d = dists[order]
    rows = values[order]
    if weighting == "uniform":
        w = np.ones(order.size)
    else:
        zero = d == 0
        if zero.any():
            w = zero.astype(np.float64)
        else:
            w = 1.0 / d
    w = w / w.sum()
    return w @ rows


def knn_impute(dataset: MultiViewDataset, spec: ImputeSpec) -> MultiViewDataset:
    """Fill every missing view row; the result's mask is all-true.

    Candidate neighbors for a missing (instance, view) cell are the rows
    observed in that view, ranked by shared-view distance; rows at
    infinite distance (nothing shared) are skipped.  When no usable
    candidate exists the view's observed column means are used.
    Observed cells are never modified; complete datasets pass through
    unchanged (apart from copying).
    """
    out = dataset.copy()
    if dataset.mask.all():
        return out
    dists = _shared_view_distances(dataset)
    for v in range(dataset.n_views):
        obs_rows = np.flatnonzero(dataset.mask[:, v])
        col_means = dataset.views[v][obs_rows].mean(axis=0)
        for i in np.flatnonzero(~dataset.mask[:, v]):
            cand = obs_rows[np.isfinite(dists[i, obs_rows])]
            if cand.size == 0:
                out.views[v][i] = col_means
                continue
            out.views[v][i] = _neighbor_fill(
                dataset.views[v][cand], dists[i, cand], spec.k, spec.weighting
            )
    out.mask = np.ones_like(dataset.mask)
    out.validate()
    return out
