"""Alternating-optimization solver for the multi-view TSK classifier.

The training objective couples, per view, a weighted ridge fit of fuzzy
design rows to label rows; free error rows standing in for missing view
rows; soft pseudo-labels on the unlabeled instances constrained to the
probability simplex; entropy-regularized adaptive view weights; and
three similarity-graph terms (label-space smoothing of model outputs,
pseudo-label smoothing over unlabeled neighbors, and cross-view output
alignment).  Each block is updated in closed form; error rows and
pseudo-label rows are swept Gauss-Seidel style through the selected
kernel backend.

Conventions: ``q_i = x_g,i + h_i`` is the imputed fuzzy design row
(missing rows have zero ``x_g`` so ``q_i = h_i``); ``u_i = q_i P`` is a
view's model output; ``b_j = sum_{t != v} a_t u_j^t`` is the alignment
target seen by view v.  With a single view the alignment term is
identically zero and disabled throughout.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from . import backend
from .data import MultiViewDataset, apply_normalizer
from .fuzzy import (
    FuzzyRuleBase,
    estimate_rule_bases,
    fuzzy_design_matrix,
    map_to_fuzzy_space,
)
from .graphs import SimilarityGraphs, build_graphs

ABLATIONS = ("full", "no_theta", "no_delta")

_TINY = 1e-300


@dataclass
class Hyperparams:
    """Solver hyperparameters.

    ``beta1`` ridge weight on consequents; ``beta2`` view-weight entropy;
    ``beta3`` label-space output smoothing; ``beta4`` pseudo-label
    smoothing; ``beta5`` cross-view output alignment.  ``ablation``
    selects a variant: ``no_theta`` zeroes beta5, ``no_delta`` zeroes
    beta3 and beta4.
    """

    beta1: float = 1.0
    beta2: float = 1.0
    beta3: float = 1.0
    beta4: float = 1.0
    beta5: float = 1.0
    n_rules: int = 4
    iterations: int = 20
    k_neighbors: int = 7
    tolerance: float = 1e-6
    seed: int = 0
    ablation: str = "full"
    width_scale: float = 1.0
    ridge_eps: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("beta1", "beta2", "beta3", "beta4", "beta5"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.beta1 <= 0:
            raise ValueError("beta1 must be > 0 (keeps the consequent system invertible)")
        if self.n_rules < 1:
            raise ValueError("n_rules must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")

    def resolved(self) -> "Hyperparams":
        """Hyperparameters with the ablation folded into the betas."""
        if self.ablation == "no_theta":
            return replace(self, beta5=0.0)
        if self.ablation == "no_delta":
            return replace(self, beta3=0.0, beta4=0.0)
        return replace(self)


@dataclass
class ObjectiveTerms:
    """The three objective components; ``total`` is their sum J."""

    gamma: float
    delta: float
    theta: float

    @property
    def total(self) -> float:
        return self.gamma + self.delta + self.theta


@dataclass
class ModelState:
    """All optimization variables at one point in training.

    ``pseudo_labels`` rows align with the dataset's ``unlabeled_idx``
    order.  ``indicator[v]`` is True where view v's row is missing (and
    hence has a live error row).
    """

    consequents: list[np.ndarray]
    view_weights: np.ndarray
    error_rows: list[np.ndarray]
    pseudo_labels: np.ndarray
    instance_weights: list[np.ndarray]
    indicator: list[np.ndarray]
    iteration: int


def softmax_view_weights(losses: np.ndarray, beta2: float) -> np.ndarray:
    """Entropy-regularized weight vector: softmax of -losses/beta2.

    Computed with max subtraction; beta2 = 0 gives the zero-temperature
    limit (all weight on the smallest loss, ties to the lowest index).
    """
    losses = np.asarray(losses, dtype=np.float64)
    if beta2 > 0:
        t = -losses / beta2
        t -= t.max()
        e = np.exp(t)
        return e / e.sum()
    a = np.zeros(losses.size)
    a[int(np.argmin(losses))] = 1.0
    return a


def compute_instance_weights(mask: np.ndarray) -> list[np.ndarray]:
    """Per-view fit weights: 1 for observed rows, observed-fraction otherwise."""
    mask = np.asarray(mask, dtype=bool)
    n = mask.shape[0]
    out = []
    for v in range(mask.shape[1]):
        frac = float(mask[:, v].sum()) / n
        w = np.where(mask[:, v], 1.0, frac)
        out.append(np.ascontiguousarray(w, dtype=np.float64))
    return out


def _quad_sym(w: sp.csr_matrix, a: np.ndarray) -> float:
    """sum_ij w_ij ||a_i - a_j||^2 over ordered pairs, symmetric w."""
    if w.nnz == 0:
        return 0.0
    r = np.asarray(w.sum(axis=1)).ravel()
    sq = np.einsum("ij,ij->i", a, a)
    return float(2.0 * (r @ sq) - 2.0 * np.einsum("ij,ij->", w @ a, a))


def _quad_cross(w: sp.csr_matrix, a: np.ndarray, b: np.ndarray) -> float:
    """sum_ij w_ij ||a_i - b_j||^2 over ordered pairs."""
    if w.nnz == 0:
        return 0.0
    r = np.asarray(w.sum(axis=1)).ravel()
    c = np.asarray(w.sum(axis=0)).ravel()
    sa = np.einsum("ij,ij->i", a, a)
    sb = np.einsum("ij,ij->i", b, b)
    return float(r @ sa + c @ sb - 2.0 * np.einsum("ij,ij->", w @ b, a))


def _csr_parts(s: sp.csr_matrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (
        s.indptr.astype(np.int64),
        s.indices.astype(np.int64),
        np.ascontiguousarray(s.data, dtype=np.float64),
    )


class Trainer:
    """Holds the live optimization state and applies block updates.

    The update methods mirror the alternating scheme: view weights by
    entropy-regularized softmax over per-view losses, consequents by a
    per-view linear solve, error rows and pseudo-label rows by
    Gauss-Seidel sweeps.  ``sweep`` runs one full outer iteration.
    """

    def __init__(self, dataset: MultiViewDataset, hyperparams: Hyperparams):
        dataset.validate()
        dataset.require_all_classes_labeled()
        self.hp_original = hyperparams
        self.hp = hyperparams.resolved()
        self.ds = dataset
        self.n = dataset.n_instances
        self.n_views = dataset.n_views
        self.n_classes = dataset.n_classes
        self.rule_bases = estimate_rule_bases(
            dataset.views, dataset.mask, self.hp.n_rules, self.hp.width_scale
        )
        self.design = map_to_fuzzy_space(dataset.views, dataset.mask, self.rule_bases).matrices
        self.wsq = [w * w for w in compute_instance_weights(dataset.mask)]
        self.miss_rows = [
            np.flatnonzero(~dataset.mask[:, v]).astype(np.int64) for v in range(self.n_views)
        ]
        self.true_mask = np.zeros(self.n, dtype=bool)
        self.true_mask[dataset.labeled_idx] = True

        rng = np.random.default_rng(self.hp.seed)
        self.H = []
        for v in range(self.n_views):
            h = np.zeros_like(self.design[v])
            rows = self.miss_rows[v]
            if rows.size:
                h[rows] = rng.normal(0.0, 0.1, size=(rows.size, h.shape[1]))
            self.H.append(h)
        self.ytilde = np.zeros((self.n, self.n_classes))
        lab = dataset.labeled_idx
        self.ytilde[lab, dataset.labels[lab]] = 1.0
        unl = dataset.unlabeled_idx
        if unl.size:
            y0 = rng.random((unl.size, self.n_classes))
            self.ytilde[unl] = y0 / y0.sum(axis=1, keepdims=True)

        self.a = np.full(self.n_views, 1.0 / self.n_views)
        self.P = [np.zeros((m.shape[1], self.n_classes)) for m in self.design]
        self.U = [np.zeros((self.n, self.n_classes)) for _ in range(self.n_views)]
        self.graphs: SimilarityGraphs | None = None
        self.iteration = 0

    # -- state plumbing ------------------------------------------------

    @property
    def theta_enabled(self) -> bool:
        return self.hp.beta5 > 0.0 and self.n_views > 1

    def imputed_design(self, v: int) -> np.ndarray:
        """q rows of view v: fuzzy design plus error rows (zero when observed)."""
        return self.design[v] + self.H[v]

    def refresh_outputs(self) -> None:
        """Recompute u = q P for every view from the current blocks."""
        for v in range(self.n_views):
            self.U[v] = self.imputed_design(v) @ self.P[v]

    def state(self) -> ModelState:
        return ModelState(
            consequents=[p.copy() for p in self.P],
            view_weights=self.a.copy(),
            error_rows=[h.copy() for h in self.H],
            pseudo_labels=self.ytilde[self.ds.unlabeled_idx].copy(),
            instance_weights=[np.sqrt(w) for w in self.wsq],
            indicator=[(~self.ds.mask[:, v]).copy() for v in range(self.n_views)],
            iteration=self.iteration,
        )

    def set_state(self, state: ModelState) -> None:
        self.P = [p.copy() for p in state.consequents]
        self.a = state.view_weights.copy()
        self.H = [h.copy() for h in state.error_rows]
        self.ytilde[self.ds.unlabeled_idx] = state.pseudo_labels
        self.iteration = state.iteration
        self.refresh_outputs()

    def rebuild_graphs(self) -> None:
        q = [self.imputed_design(v) for v in range(self.n_views)]
        self.graphs = build_graphs(
            q,
            self.ds.mask,
            self.ytilde,
            self.true_mask,
            self.ds.labels,
            self.ds.unlabeled_idx,
            self.hp.k_neighbors,
        )

    def _require_graphs(self) -> SimilarityGraphs:
        if self.graphs is None:
            self.rebuild_graphs()
        return self.graphs

    # -- block updates -------------------------------------------------

    def view_losses(self) -> np.ndarray:
        """Weighted squared fit losses per view: sum_i w~_i^2 ||u_i - y~_i||^2."""
        out = np.empty(self.n_views)
        for v in range(self.n_views):
            resid = self.U[v] - self.ytilde
            out[v] = np.einsum("i,ij,ij->", self.wsq[v], resid, resid)
        return out

    def update_view_weights(self) -> np.ndarray:
        """Softmax over negated view losses, damped to preserve descent.

        With beta2 = 0 the softmax limit assigns all weight to the
        smallest loss (ties to the lowest view index).  When the
        cross-view alignment term is inactive the softmax point is the
        exact minimizer of the weight sub-objective and is taken as is.
        When alignment is active it couples the weights into the
        objective through the alignment targets, so the softmax point
        alone can increase the objective; the step is then damped by an
        exact line search on the segment from the current weights to the
        softmax point.  Restricted to that segment the objective is
        convex (linear fit part, entropy, and a convex quadratic from
        alignment), so the damped step never increases the objective,
        and it returns the softmax point itself whenever that point
        already descends.
        """
        losses = self.view_losses()
        cand = softmax_view_weights(losses, self.hp.beta2)
        if not self.theta_enabled:
            self.a = cand
            return self.a
        a_old = self.a
        d = cand - a_old
        if float(np.max(np.abs(d))) <= _TINY:
            self.a = cand
            return self.a
        graphs = self._require_graphs()
        beta2 = self.hp.beta2
        beta5 = self.hp.beta5
        lin = float(d @ losses)
        # Alignment restricted to the segment a(t) = a_old + t d is the
        # quadratic quad2*t^2 + quad1*t (+ const): each view's targets are
        # B_old + t*B_dir with B_old, B_dir the weighted sums of the other
        # views' outputs under a_old and d.
        total_old = np.zeros_like(self.U[0])
        total_dir = np.zeros_like(self.U[0])
        for t in range(self.n_views):
            total_old += a_old[t] * self.U[t]
            total_dir += d[t] * self.U[t]
        quad2 = 0.0
        quad1 = 0.0
        for v in range(self.n_views):
            s_v = graphs.s_all[v]
            if s_v.nnz == 0:
                continue
            b_old = total_old - a_old[v] * self.U[v]
            b_dir = total_dir - d[v] * self.U[v]
            colsum = np.asarray(s_v.sum(axis=0)).ravel()
            stu = s_v.T @ self.U[v]
            quad2 += beta5 * float(colsum @ np.sum(b_dir * b_dir, axis=1))
            quad1 += -2.0 * beta5 * float(
                np.sum(stu * b_dir) - colsum @ np.sum(b_old * b_dir, axis=1)
            )

        def slope(t: float) -> float:
            value = lin + 2.0 * quad2 * t + quad1
            if beta2 > 0:
                at = np.maximum(a_old + t * d, _TINY)
                value += beta2 * float(d @ (np.log(at) + 1.0))
            return value

        if slope(1.0) <= 0.0:
            t_star = 1.0
        elif slope(0.0) >= 0.0:
            t_star = 0.0
        else:
            lo, hi = 0.0, 1.0
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if slope(mid) <= 0.0:
                    lo = mid
                else:
                    hi = mid
            t_star = 0.5 * (lo + hi)
        self.a = a_old + t_star * d
        return self.a

    def update_consequents(self, v: int) -> np.ndarray:
        """Exact minimizer of the objective in view v's consequent matrix.

        Solves the (d_g x d_g) normal system gathering every occurrence
        of P^v: the weighted fit, the ridge, the label-graph Laplacian
        quadratic, and - when alignment is active - both the view's own
        alignment term and the occurrences of u^v inside other views'
        alignment targets.
        """
        hp = self.hp
        g = self._require_graphs()
        q = self.imputed_design(v)
        wsq = self.wsq[v]
        a_v = float(self.a[v])

        m = hp.beta1 * np.eye(q.shape[1])
        m += a_v * (q.T @ (wsq[:, None] * q))
        rhs = a_v * (q.T @ (wsq[:, None] * self.ytilde))
        if hp.beta3 > 0 and g.z.nnz:
            zdeg = np.asarray(g.z.sum(axis=1)).ravel()
            m += 2.0 * hp.beta3 * (q.T @ (zdeg[:, None] * q) - q.T @ (g.z @ q))
        if self.theta_enabled:
            s_v = g.s_all[v]
            srow = np.asarray(s_v.sum(axis=1)).ravel()
            m += hp.beta5 * (q.T @ (srow[:, None] * q))
            total = sum(self.a[t] * self.U[t] for t in range(self.n_views))
            b_v = total - a_v * self.U[v]
            rhs += hp.beta5 * (q.T @ (s_v @ b_v))
            gcol = np.zeros(self.n)
            cross = np.zeros((self.n, self.n_classes))
            for t in range(self.n_views):
                if t == v:
                    continue
                s_t = g.s_all[t]
                cs = np.asarray(s_t.sum(axis=0)).ravel()
                gcol += cs
                r_tv = total - self.a[t] * self.U[t] - a_v * self.U[v]
                cross += s_t.T @ self.U[t] - cs[:, None] * r_tv
            m += hp.beta5 * a_v * a_v * (q.T @ (gcol[:, None] * q))
            rhs += hp.beta5 * a_v * (q.T @ cross)
        if not np.all(np.isfinite(m)) or not np.all(np.isfinite(rhs)):
            raise FloatingPointError(f"non-finite consequent system for view {v}")
        self.P[v] = np.linalg.solve(m, rhs)
        self.U[v] = q @ self.P[v]
        return self.P[v]

    def _error_sweep_inputs(self, v: int):
        g = self._require_graphs()
        p = self.P[v]
        c = self.n_classes
        gram = p.T @ p + self.hp.ridge_eps * np.eye(c)
        pdag = np.linalg.solve(gram, p.T)
        z_indptr, z_indices, z_data = _csr_parts(g.z)
        s_indptr, s_indices, s_data = _csr_parts(g.s_all[v])
        s_rowsum = np.asarray(g.s_all[v].sum(axis=1)).ravel()
        if self.theta_enabled:
            total = sum(self.a[t] * self.U[t] for t in range(self.n_views))
            b_v = np.ascontiguousarray(total - self.a[v] * self.U[v])
            gcol = np.zeros(self.n)
            cross = np.zeros((self.n, c))
            for t in range(self.n_views):
                if t == v:
                    continue
                s_t = g.s_all[t]
                cs = np.asarray(s_t.sum(axis=0)).ravel()
                gcol += cs
                r_tv = total - self.a[t] * self.U[t] - self.a[v] * self.U[v]
                cross += s_t.T @ self.U[t] - cs[:, None] * r_tv
            cross = np.ascontiguousarray(cross)
        else:
            b_v = np.zeros((self.n, c))
            gcol = np.zeros(self.n)
            cross = np.zeros((self.n, c))
        return (
            p,
            pdag,
            z_indptr,
            z_indices,
            z_data,
            s_indptr,
            s_indices,
            s_data,
            s_rowsum,
            b_v,
            cross,
            gcol,
        )

    def update_error_rows(self, v: int, rows: np.ndarray | None = None) -> None:
        """Gauss-Seidel sweep over view v's missing rows (or a subset)."""
        target = self.miss_rows[v] if rows is None else np.asarray(rows, dtype=np.int64)
        if target.size == 0:
            return
        (
            p,
            pdag,
            z_indptr,
            z_indices,
            z_data,
            s_indptr,
            s_indices,
            s_data,
            s_rowsum,
            b_v,
            cross,
            gcol,
        ) = self._error_sweep_inputs(v)
        backend.error_row_sweep(
            self.H[v],
            self.U[v],
            np.ascontiguousarray(p),
            np.ascontiguousarray(pdag),
            self.ytilde,
            target,
            self.wsq[v],
            float(self.a[v]),
            float(self.hp.beta3),
            float(self.hp.beta5),
            z_indptr,
            z_indices,
            z_data,
            s_indptr,
            s_indices,
            s_data,
            s_rowsum,
            b_v,
            cross,
            gcol,
            self.theta_enabled,
        )
        if not np.all(np.isfinite(self.H[v])):
            raise FloatingPointError(f"non-finite error rows in view {v}")

    def update_pseudo_labels(self, rows: np.ndarray | None = None) -> None:
        """Gauss-Seidel sweep over pseudo-label rows with simplex projection.

        ``rows`` selects local unlabeled indices (default: all).
        """
        unl = self.ds.unlabeled_idx
        if unl.size == 0:
            return
        g = self._require_graphs()
        local = np.arange(unl.size, dtype=np.int64) if rows is None else np.asarray(rows, dtype=np.int64)
        u_stack = np.ascontiguousarray(np.stack(self.U))
        wsq_stack = np.ascontiguousarray(np.stack(self.wsq))
        nv = self.n_views
        nu = unl.size
        indptr = np.empty((nv, nu + 1), dtype=np.int64)
        indices_parts = []
        data_parts = []
        offsets = np.zeros(nv, dtype=np.int64)
        rowsum = np.empty((nv, nu))
        pos = 0
        for v in range(nv):
            s = g.s_unl[v]
            indptr[v] = s.indptr.astype(np.int64)
            indices_parts.append(s.indices.astype(np.int64))
            data_parts.append(np.ascontiguousarray(s.data, dtype=np.float64))
            offsets[v] = pos
            pos += s.nnz
            rowsum[v] = np.asarray(s.sum(axis=1)).ravel()
        indices = np.concatenate(indices_parts) if pos else np.zeros(0, dtype=np.int64)
        data = np.concatenate(data_parts) if pos else np.zeros(0)
        backend.pseudo_row_sweep(
            self.ytilde,
            unl,
            u_stack,
            wsq_stack,
            self.a,
            float(self.hp.beta4),
            indptr,
            indices,
            data,
            offsets,
            rowsum,
            local,
        )
        if not np.all(np.isfinite(self.ytilde)):
            raise FloatingPointError("non-finite pseudo-labels")

    # -- objective -----------------------------------------------------

    def evaluate_objective(self) -> ObjectiveTerms:
        """Current objective terms under the graphs built for this iteration."""
        hp = self.hp
        g = self._require_graphs()
        losses = self.view_losses()
        a = self.a
        pos = a > 0
        entropy = float(np.sum(a[pos] * np.log(a[pos])))
        gamma = float(a @ losses)
        gamma += hp.beta1 * float(sum(np.einsum("ij,ij->", p, p) for p in self.P))
        gamma += hp.beta2 * entropy

        delta = 0.0
        if hp.beta4 > 0:
            yu = self.ytilde[self.ds.unlabeled_idx]
            for v in range(self.n_views):
                delta += hp.beta4 * _quad_sym(g.s_unl[v], yu)
        if hp.beta3 > 0:
            for v in range(self.n_views):
                delta += hp.beta3 * _quad_sym(g.z, self.U[v])

        theta = 0.0
        if self.theta_enabled:
            total = sum(self.a[t] * self.U[t] for t in range(self.n_views))
            for v in range(self.n_views):
                b_v = total - self.a[v] * self.U[v]
                theta += hp.beta5 * _quad_cross(g.s_all[v], self.U[v], b_v)

        terms = ObjectiveTerms(gamma=gamma, delta=delta, theta=theta)
        if not np.isfinite(terms.total):
            raise FloatingPointError(f"objective diverged: {terms}")
        return terms

    # -- outer loop ----------------------------------------------------

    def sweep(self, rebuild: bool = True) -> None:
        """One outer iteration: optional graph rebuild, then all block updates."""
        if rebuild or self.graphs is None:
            self.rebuild_graphs()
        for v in range(self.n_views):
            self.update_view_weights()
            self.update_consequents(v)
            self.update_error_rows(v)
        self.update_pseudo_labels()
        self.iteration += 1


@dataclass
class FittedModel:
    """A trained model plus everything needed for prediction and export."""

    state: ModelState
    rule_bases: list[FuzzyRuleBase]
    normalizers: list[tuple[np.ndarray, np.ndarray]]
    labels: np.ndarray
    labeled_idx: np.ndarray
    unlabeled_idx: np.ndarray
    hyperparams: Hyperparams
    trace: np.ndarray
    n_classes: int
    view_dims: list[int]


def fit(
    dataset: MultiViewDataset,
    hyperparams: Hyperparams,
    freeze_graphs: bool = False,
    callback: Callable[[Trainer, ObjectiveTerms], None] | None = None,
) -> FittedModel:
    """Train by alternating sweeps.

    Graphs are rebuilt at the top of each iteration unless
    ``freeze_graphs`` keeps the initial ones.  Training stops early when
    the relative objective change drops below ``tolerance`` (disabled
    when tolerance <= 0).  The trace records (iteration, Gamma, Delta,
    Theta, J, view weights) at initialization and after each iteration.
    """
    tr = Trainer(dataset, hyperparams)
    hp = tr.hp
    tr.rebuild_graphs()
    terms = tr.evaluate_objective()
    rows = [[0.0, terms.gamma, terms.delta, terms.theta, terms.total, *tr.a]]
    prev = terms.total
    for t in range(1, hp.iterations + 1):
        tr.sweep(rebuild=(t > 1 and not freeze_graphs))
        terms = tr.evaluate_objective()
        rows.append([float(t), terms.gamma, terms.delta, terms.theta, terms.total, *tr.a])
        if callback is not None:
            callback(tr, terms)
        if hp.tolerance > 0 and abs(terms.total - prev) <= hp.tolerance * max(1.0, abs(prev)):
            break
        prev = terms.total
    return FittedModel(
        state=tr.state(),
        rule_bases=tr.rule_bases,
        normalizers=tr.ds.normalizers,
        labels=tr.ds.labels.copy(),
        labeled_idx=tr.ds.labeled_idx.copy(),
        unlabeled_idx=tr.ds.unlabeled_idx.copy(),
        hyperparams=tr.hp_original,
        trace=np.asarray(rows),
        n_classes=tr.n_classes,
        view_dims=list(tr.ds.view_dims),
    )


def predict_transductive(model: FittedModel) -> tuple[np.ndarray, np.ndarray]:
    """Class decisions for the unlabeled instances.

    Returns (unlabeled_idx, predictions); ties in a pseudo-label row
    resolve to the lowest class index.
    """
    preds = np.argmax(model.state.pseudo_labels, axis=1).astype(np.int64)
    return model.unlabeled_idx.copy(), preds


def predict_all(model: FittedModel) -> np.ndarray:
    """Full-length decision vector: known labels where given, else pseudo argmax."""
    out = model.labels.copy()
    idx, preds = predict_transductive(model)
    out[idx] = preds
    return out


def predict_inductive(model: FittedModel, views: Sequence[np.ndarray]) -> np.ndarray:
    """Classify new fully observed instances.

    ``views[v]`` is an (M, d_v) raw feature matrix; every view must be
    present and finite.  Rows are normalized with the stored statistics,
    mapped to fuzzy design space, scored as the view-weighted sum of
    consequent outputs, and decided by argmax (ties to the lowest class
    index).
    """
    if len(views) != len(model.view_dims):
        raise ValueError(f"expected {len(model.view_dims)} views, got {len(views)}")
    score = None
    for v, x in enumerate(views):
        if x is None:
            raise ValueError(f"view {v} is missing; inductive prediction needs all views")
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != model.view_dims[v]:
            raise ValueError(
                f"view {v} must have {model.view_dims[v]} features, got {x.shape[1]}"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError(f"view {v} contains non-finite values")
        z = apply_normalizer(x, model.normalizers[v])
        g = fuzzy_design_matrix(z, model.rule_bases[v])
        contrib = model.state.view_weights[v] * (g @ model.state.consequents[v])
        score = contrib if score is None else score + contrib
    return np.argmax(score, axis=1).astype(np.int64)


def transductive_accuracy(model: FittedModel, true_labels: np.ndarray) -> float:
    """Accuracy of pseudo-label decisions against ground truth on unlabeled rows."""
    idx, preds = predict_transductive(model)
    truth = np.asarray(true_labels)[idx]
    known = truth >= 0
    if not known.any():
        raise ValueError("no ground-truth labels available on unlabeled rows")
    return float(np.mean(preds[known] == truth[known]))


def write_trace_csv(model: FittedModel, path: str | Path) -> None:
    """Objective trace as CSV: iteration, Gamma, Delta, Theta, J, view weights."""
    nv = len(model.view_dims)
    header = ["iteration", "Gamma", "Delta", "Theta", "J"] + [f"a_{v}" for v in range(nv)]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in model.trace:
            cells = [str(int(row[0]))] + [repr(float(x)) for x in row[1:]]
            fh.write(",".join(cells) + "\n")


_CHECKPOINT_VERSION = 1


def save_checkpoint(model: FittedModel, path: str | Path) -> None:
    """Serialize a fitted model to a single .npz file (no pickling)."""
    arrays: dict[str, np.ndarray] = {
        "view_weights": model.state.view_weights,
        "pseudo_labels": model.state.pseudo_labels,
        "labels": model.labels,
        "labeled_idx": model.labeled_idx,
        "unlabeled_idx": model.unlabeled_idx,
        "trace": model.trace,
    }
    for v in range(len(model.view_dims)):
        arrays[f"consequents_{v}"] = model.state.consequents[v]
        arrays[f"error_rows_{v}"] = model.state.error_rows[v]
        arrays[f"instance_weights_{v}"] = model.state.instance_weights[v]
        arrays[f"indicator_{v}"] = model.state.indicator[v]
        arrays[f"centers_{v}"] = model.rule_bases[v].centers
        arrays[f"widths_{v}"] = model.rule_bases[v].widths
        arrays[f"norm_mean_{v}"] = model.normalizers[v][0]
        arrays[f"norm_std_{v}"] = model.normalizers[v][1]
    meta = {
        "version": _CHECKPOINT_VERSION,
        "n_views": len(model.view_dims),
        "n_classes": model.n_classes,
        "view_dims": model.view_dims,
        "iteration": model.state.iteration,
        "hyperparams": asdict(model.hyperparams),
    }
    arrays["meta"] = np.array(json.dumps(meta))
    np.savez(path, **arrays)


def load_checkpoint(path: str | Path) -> FittedModel:
    """Inverse of save_checkpoint; arrays round-trip bit-exactly."""
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("version") != _CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        nv = meta["n_views"]
        state = ModelState(
            consequents=[z[f"consequents_{v}"] for v in range(nv)],
            view_weights=z["view_weights"],
            error_rows=[z[f"error_rows_{v}"] for v in range(nv)],
            pseudo_labels=z["pseudo_labels"],
            instance_weights=[z[f"instance_weights_{v}"] for v in range(nv)],
            indicator=[z[f"indicator_{v}"].astype(bool) for v in range(nv)],
            iteration=meta["iteration"],
        )
        rule_bases = [
            FuzzyRuleBase(centers=z[f"centers_{v}"], widths=z[f"widths_{v}"]) for v in range(nv)
        ]
        normalizers = [(z[f"norm_mean_{v}"], z[f"norm_std_{v}"]) for v in range(nv)]
        return FittedModel(
            state=state,
            rule_bases=rule_bases,
            normalizers=normalizers,
            labels=z["labels"],
            labeled_idx=z["labeled_idx"],
            unlabeled_idx=z["unlabeled_idx"],
            hyperparams=Hyperparams(**meta["hyperparams"]),
            trace=z["trace"],
            n_classes=meta["n_classes"],
            view_dims=list(meta["view_dims"]),
        )
