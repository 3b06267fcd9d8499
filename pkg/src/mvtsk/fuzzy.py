"""TSK fuzzy rule antecedents and the fuzzy feature mapping.

Each view gets K rules.  Rule k holds one Gaussian membership function
per input dimension, ``exp(-(x - c)^2 / (2 * delta))`` with center ``c``
and width ``delta`` (the width enters linearly, not squared).  A rule's
firing strength is the product of its per-dimension memberships,
normalized across rules to sum to one.  The fuzzy design vector of an
instance concatenates, over rules, the normalized strength times the
affine input ``[1, x]``, giving dimension ``K * (d + 1)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

WIDTH_FLOOR = 1e-6


@dataclass
class FuzzyRuleBase:
    """Antecedents of K rules over a d-dimensional view.

    ``centers`` and ``widths`` are (K, d); widths are bounded below by
    ``WIDTH_FLOOR`` so memberships stay well-defined.
    """

    centers: np.ndarray
    widths: np.ndarray

    def __post_init__(self) -> None:
        self.centers = np.ascontiguousarray(self.centers, dtype=np.float64)
        self.widths = np.ascontiguousarray(self.widths, dtype=np.float64)
        if self.centers.ndim != 2 or self.centers.shape != self.widths.shape:
            raise ValueError("centers and widths must share shape (K, d)")
        if np.any(self.widths <= 0):
            raise ValueError("widths must be positive")

    @property
    def n_rules(self) -> int:
        return self.centers.shape[0]

    @property
    def n_features(self) -> int:
        return self.centers.shape[1]


def gaussian_membership(x: float, center: float, width: float) -> float:
    """Membership exp(-(x - center)^2 / (2 * width)); width must be > 0."""
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    diff = float(x) - float(center)
    return float(np.exp(-(diff * diff) / (2.0 * float(width))))


def _log_strengths(x: np.ndarray, rules: FuzzyRuleBase) -> np.ndarray:
    """Unnormalized log firing strengths, shape (N, K) for x of shape (N, d)."""
    diff = x[:, None, :] - rules.centers[None, :, :]
    return -np.sum(diff * diff / (2.0 * rules.widths[None, :, :]), axis=2)


def firing_strengths(x: np.ndarray, rules: FuzzyRuleBase) -> np.ndarray:
    """Normalized firing strengths of one instance, shape (K,), summing to 1.

    Computed in log-space with max subtraction; when all strengths
    underflow the limit is the uniform distribution over rules.
    """
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != rules.n_features:
        raise ValueError(f"expected {rules.n_features} features, got {x.shape[1]}")
    log_mu = _log_strengths(x, rules)[0]
    log_mu = log_mu - log_mu.max()
    mu = np.exp(log_mu)
    return mu / mu.sum()


def normalized_strength_matrix(x: np.ndarray, rules: FuzzyRuleBase) -> np.ndarray:
    """Row-wise normalized firing strengths, shape (N, K)."""
    x = np.asarray(x, dtype=np.float64)
    log_mu = _log_strengths(x, rules)
    log_mu = log_mu - log_mu.max(axis=1, keepdims=True)
    mu = np.exp(log_mu)
    return mu / mu.sum(axis=1, keepdims=True)


def estimate_antecedents(
    x: np.ndarray,
    n_rules: int,
    width_scale: float = 1.0,
    width_floor: float = WIDTH_FLOOR,
) -> FuzzyRuleBase:
    """Estimate rule centers and widths by deterministic variance partitioning.

    Starting from one cluster holding all rows, repeat K-1 times: take
    the cluster with the largest within-cluster sum of squares and split
    it at the mean of its highest-variance dimension (ties broken by the
    lower index).  A split that would empty a side falls through to the
    next-largest cluster.  Centers are cluster means; widths are
    ``width_scale`` times per-dimension cluster variances, floored at
    ``width_floor``.

    Raises ValueError when fewer distinct rows than rules exist, making
    K nonempty clusters impossible.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("x must be a nonempty (N, d) matrix")
    if n_rules < 1:
        raise ValueError(f"n_rules must be >= 1, got {n_rules}")
    clusters: list[np.ndarray] = [np.arange(x.shape[0])]
    for _ in range(n_rules - 1):
        sse = [float(np.var(x[idx], axis=0).sum() * idx.size) for idx in clusters]
        order = sorted(range(len(clusters)), key=lambda i: (-sse[i], i))
        done = False
        for ci in order:
            idx = clusters[ci]
            if idx.size < 2:
                continue
            var = np.var(x[idx], axis=0)
            dim = int(np.argmax(var))
            thresh = float(x[idx, dim].mean())
            left = idx[x[idx, dim] <= thresh]
            right = idx[x[idx, dim] > thresh]
            if left.size == 0 or right.size == 0:
                continue
            clusters[ci : ci + 1] = [left, right]
            done = True
            break
        if not done:
            raise ValueError(
                f"cannot partition {x.shape[0]} rows into {n_rules} nonempty clusters"
            )
    centers = np.stack([x[idx].mean(axis=0) for idx in clusters])
    widths = np.stack([np.var(x[idx], axis=0) for idx in clusters])
    widths = np.maximum(width_scale * widths, width_floor)
    return FuzzyRuleBase(centers=centers, widths=widths)


@dataclass
class FuzzyDesign:
    """Per-view fuzzy design matrices.

    ``matrices[v]`` has shape (N, K*(d_v + 1)); rows missing in view v
    are all zeros.  Column block k holds ``strength_k * [1, x]``.
    """

    matrices: list[np.ndarray]
    n_rules: int

    @property
    def dims(self) -> list[int]:
        return [m.shape[1] for m in self.matrices]


def fuzzy_design_matrix(x: np.ndarray, rules: FuzzyRuleBase) -> np.ndarray:
    """Map raw rows (N, d) to fuzzy design rows (N, K*(d+1))."""
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    mu = normalized_strength_matrix(x, rules)
    affine = np.concatenate([np.ones((n, 1)), x], axis=1)
    out = mu[:, :, None] * affine[:, None, :]
    return out.reshape(n, rules.n_rules * (d + 1))


def map_to_fuzzy_space(
    views: Sequence[np.ndarray],
    mask: np.ndarray,
    rule_bases: Sequence[FuzzyRuleBase],
) -> FuzzyDesign:
    """Build per-view design matrices, zeroing rows missing in each view."""
    if len(views) != len(rule_bases):
        raise ValueError("need one rule base per view")
    mats = []
    for v, (x, rules) in enumerate(zip(views, rule_bases)):
        g = fuzzy_design_matrix(x, rules)
        g[~mask[:, v]] = 0.0
        mats.append(np.ascontiguousarray(g))
    k = rule_bases[0].n_rules
    if any(rb.n_rules != k for rb in rule_bases):
        raise ValueError("all views must use the same number of rules")
    return FuzzyDesign(matrices=mats, n_rules=k)


def estimate_rule_bases(
    views: Sequence[np.ndarray],
    mask: np.ndarray,
    n_rules: int,
    width_scale: float = 1.0,
) -> list[FuzzyRuleBase]:
    """Estimate one rule base per view from that view's observed rows."""
    bases = []
    for v, x in enumerate(views):
        obs = mask[:, v]
        bases.append(estimate_antecedents(x[obs], n_rules, width_scale=width_scale))
    return bases


def _level_names(k: int) -> list[str]:
    """Linguistic labels for k ordered levels, low to high."""
    fixed = {
        1: ["Medium"],
        2: ["Low", "High"],
        3: ["Low", "Medium", "High"],
        4: ["Low", "Medium", "Little High", "High"],
        5: ["Low", "Little Low", "Medium", "Little High", "High"],
    }
    if k in fixed:
        return fixed[k]
    return [f"Level {i + 1}" for i in range(k)]


def export_rules(
    rules: FuzzyRuleBase,
    consequents: np.ndarray,
    feature_names: Sequence[str] | None = None,
    class_names: Sequence[str] | None = None,
) -> tuple[str, list[dict]]:
    """Render a rule base in IF-THEN form.

    For each feature, a rule's center is ranked among all rules' centers
    for that feature (ties by rule index) and mapped to a linguistic
    label from low to high.  The THEN part lists, per class, the
    consequent coefficients ``[p0, p1..pd]`` of that rule's block in the
    (K*(d+1), C) consequent matrix.

    Returns the plain-text rendering and a list of JSON-serializable
    per-rule records.
    """
    k, d = rules.centers.shape
    consequents = np.asarray(consequents, dtype=np.float64)
    if consequents.shape[0] != k * (d + 1):
        raise ValueError(
            f"consequents must have {k * (d + 1)} rows for K={k}, d={d}, "
            f"got {consequents.shape[0]}"
        )
    n_classes = consequents.shape[1]
    if feature_names is None:
        feature_names = [f"x{i + 1}" for i in range(d)]
    if class_names is None:
        class_names = [f"class {c}" for c in range(n_classes)]
    if len(feature_names) != d or len(class_names) != n_classes:
        raise ValueError("feature_names/class_names lengths do not match")
    labels = _level_names(k)
    # rank[k_, i] = position of rule k_'s center among all centers of feature i
    order = np.argsort(rules.centers, axis=0, kind="stable")
    rank = np.empty_like(order)
    for i in range(d):
        rank[order[:, i], i] = np.arange(k)
    lines = []
    records = []
    for r in range(k):
        conds = [f"{feature_names[i]} is {labels[rank[r, i]]}" for i in range(d)]
        block = consequents[r * (d + 1) : (r + 1) * (d + 1)]
        lines.append(f"Rule {r + 1}:")
        lines.append("  IF   " + " and ".join(conds))
        lines.append("  THEN")
        then = {}
        for c in range(n_classes):
            coeffs = block[:, c]
            terms = [f"{coeffs[0]:+.6g}"]
            terms += [f"{coeffs[i + 1]:+.6g}*{feature_names[i]}" for i in range(d)]
            lines.append(f"    {class_names[c]}: " + " ".join(terms))
            then[str(class_names[c])] = [float(t) for t in coeffs]
        lines.append("")
        records.append(
            {
                "rule": r + 1,
                "if": {feature_names[i]: labels[rank[r, i]] for i in range(d)},
                "then": then,
                "centers": [float(t) for t in rules.centers[r]],
                "widths": [float(t) for t in rules.widths[r]],
            }
        )
    return "\n".join(lines), records


def rules_to_json(records: list[dict]) -> str:
    """Serialize export_rules records as pretty-printed JSON."""
    return json.dumps(records, indent=2)
