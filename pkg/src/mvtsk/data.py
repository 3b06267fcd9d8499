"""Multi-view datasets with per-view missing-row masks and label splits.

A dataset is a list of per-view feature matrices over the same N
instances, a boolean observedness mask of shape (N, V), and a label
vector that may contain ``-1`` for instances whose class is unknown.
Rows that are missing in a view are stored as all-zero placeholders in
that view's matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

UNLABELED = -1


@dataclass
class MaskSpec:
    """Per-view missing-row generation parameters.

    ``missing_rates`` holds one rate in [0, 1) per view; ``floor(rate * N)``
    rows of that view are masked out.  ``max_retries`` bounds the
    resampling used to keep every instance observed in at least one view.
    """

    missing_rates: Sequence[float]
    seed: int = 0
    max_retries: int = 1000

    def __post_init__(self) -> None:
        rates = [float(r) for r in self.missing_rates]
        for r in rates:
            if not 0.0 <= r < 1.0:
                raise ValueError(f"missing rate must be in [0, 1), got {r}")
        self.missing_rates = rates


@dataclass
class SplitSpec:
    """Labeled/unlabeled split parameters.

    ``floor(labeled_rate * N + 0.5)`` instances are marked labeled.  With
    ``stratified`` set, labeled counts per class follow largest-remainder
    proportional allocation with at least one instance per class.
    """

    labeled_rate: float
    seed: int = 0
    stratified: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.labeled_rate <= 1.0:
            raise ValueError(f"labeled rate must be in (0, 1], got {self.labeled_rate}")


@dataclass
class MultiViewDataset:
    """N instances described by V feature views, some view-rows missing.

    Attributes
    ----------
    views : list of (N, d_v) float64 arrays
        Feature matrices; rows not observed per ``mask`` are all zeros.
    mask : (N, V) bool array
        True where the instance's row in that view is observed.
    labels : (N,) int64 array
        Class indices in {0..C-1}; ``-1`` marks unknown ground truth.
    labeled_idx, unlabeled_idx : int64 arrays
        Complementary index sets defining the transductive split.
    normalizers : list of (mean, std) pairs
        Per-view column statistics used for z-scoring; needed to map raw
        inputs into model space at prediction time.
    """

    views: list[np.ndarray]
    mask: np.ndarray
    labels: np.ndarray
    labeled_idx: np.ndarray
    unlabeled_idx: np.ndarray
    normalizers: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    @property
    def n_instances(self) -> int:
        return self.views[0].shape[0]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def view_dims(self) -> list[int]:
        return [v.shape[1] for v in self.views]

    @property
    def n_classes(self) -> int:
        known = self.labels[self.labels >= 0]
        if known.size == 0:
            raise ValueError("dataset has no known labels")
        return int(known.max()) + 1

    def validate(self) -> None:
        """Check structural invariants; raise ValueError on violation."""
        n = self.n_instances
        if not self.views:
            raise ValueError("dataset needs at least one view")
        for v, x in enumerate(self.views):
            if x.ndim != 2 or x.shape[0] != n:
                raise ValueError(f"view {v} must be (N, d_v) with N={n}, got {x.shape}")
            if not np.all(np.isfinite(x)):
                raise ValueError(f"view {v} contains non-finite values")
        if self.mask.shape != (n, self.n_views):
            raise ValueError(f"mask must be (N, V)=({n}, {self.n_views}), got {self.mask.shape}")
        if self.mask.dtype != np.bool_:
            raise ValueError("mask must be boolean")
        if not np.all(self.mask.any(axis=1)):
            bad = np.flatnonzero(~self.mask.any(axis=1))
            raise ValueError(f"instances observed in no view: {bad.tolist()[:10]}")
        for v, x in enumerate(self.views):
            miss = ~self.mask[:, v]
            if miss.any() and np.any(x[miss] != 0.0):
                raise ValueError(f"view {v} has nonzero entries on masked rows")
        if self.labels.shape != (n,):
            raise ValueError(f"labels must be length {n}, got {self.labels.shape}")
        if np.any(self.labels < UNLABELED):
            raise ValueError("labels must be >= -1")
        both = np.intersect1d(self.labeled_idx, self.unlabeled_idx)
        if both.size:
            raise ValueError("labeled and unlabeled index sets overlap")
        union = np.union1d(self.labeled_idx, self.unlabeled_idx)
        if union.size != n or (union != np.arange(n)).any():
            raise ValueError("labeled/unlabeled sets must partition all instances")
        lab = self.labels[self.labeled_idx]
        if np.any(lab < 0):
            raise ValueError("labeled instances must have known labels")
        if self.labeled_idx.size:
            present = np.unique(lab)
            expected = np.arange(self.n_classes)
            if not np.array_equal(np.intersect1d(present, expected), present) or present.size == 0:
                raise ValueError("labeled classes outside expected range")

    def require_all_classes_labeled(self) -> None:
        """Raise if some class has no labeled representative."""
        present = np.unique(self.labels[self.labeled_idx])
        missing = np.setdiff1d(np.arange(self.n_classes), present)
        if missing.size:
            raise ValueError(f"classes with no labeled instance: {missing.tolist()}")

    def copy(self) -> "MultiViewDataset":
        return MultiViewDataset(
            views=[x.copy() for x in self.views],
            mask=self.mask.copy(),
            labels=self.labels.copy(),
            labeled_idx=self.labeled_idx.copy(),
            unlabeled_idx=self.unlabeled_idx.copy(),
            normalizers=[(m.copy(), s.copy()) for m, s in self.normalizers],
        )


def _normalize_views(
    views: list[np.ndarray], mask: np.ndarray
) -> tuple[list[np.ndarray], list[tuple[np.ndarray, np.ndarray]]]:
    """Z-score each column over that view's observed rows; zero missing rows.

    Zero-variance columns map to zeros.  Normalizing an already
    normalized view with the same observed set is a no-op.
    """
    out = []
    params = []
    for v, x in enumerate(views):
        x = np.ascontiguousarray(x, dtype=np.float64)
        obs = mask[:, v]
        if not obs.any():
            raise ValueError(f"view {v} has no observed rows")
        mean = x[obs].mean(axis=0)
        std = x[obs].std(axis=0)
        z = np.zeros_like(x)
        nz = std > 0
        z[np.ix_(obs, nz)] = (x[np.ix_(obs, nz)] - mean[nz]) / std[nz]
        out.append(z)
        params.append((mean, std))
    return out, params


def apply_normalizer(x: np.ndarray, normalizer: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """Map raw feature rows into the z-scored space of a stored view."""
    mean, std = normalizer
    x = np.asarray(x, dtype=np.float64)
    z = np.zeros_like(x)
    nz = std > 0
    z[..., nz] = (x[..., nz] - mean[nz]) / std[nz]
    return z


def from_arrays(
    views: Sequence[np.ndarray],
    labels: np.ndarray,
    mask: np.ndarray | None = None,
    labeled_idx: np.ndarray | None = None,
    normalize: bool = True,
) -> MultiViewDataset:
    """Build a validated dataset from in-memory arrays.

    With ``labeled_idx`` unset, instances with label >= 0 are labeled and
    the rest unlabeled.  With ``mask`` unset, all rows count as observed.
    """
    views = [np.ascontiguousarray(x, dtype=np.float64) for x in views]
    n = views[0].shape[0]
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if mask is None:
        mask = np.ones((n, len(views)), dtype=bool)
    else:
        mask = np.ascontiguousarray(mask).astype(bool)
    if labeled_idx is None:
        labeled_idx = np.flatnonzero(labels >= 0).astype(np.int64)
    else:
        labeled_idx = np.ascontiguousarray(labeled_idx, dtype=np.int64)
    unlabeled_idx = np.setdiff1d(np.arange(n, dtype=np.int64), labeled_idx)
    if normalize:
        views, params = _normalize_views(views, mask)
    else:
        views = [x.copy() for x in views]
        for v in range(len(views)):
            views[v][~mask[:, v]] = 0.0
        params = [(np.zeros(x.shape[1]), np.ones(x.shape[1])) for x in views]
    ds = MultiViewDataset(
        views=views,
        mask=mask,
        labels=labels,
        labeled_idx=labeled_idx,
        unlabeled_idx=unlabeled_idx,
        normalizers=params,
    )
    ds.validate()
    return ds


def load_dataset(
    view_paths: Sequence[str | Path],
    label_path: str | Path,
    mask_path: str | Path | None = None,
) -> MultiViewDataset:
    """Read a dataset from headerless CSV files.

    Each view file is an (N, d_v) numeric CSV.  The label file holds one
    integer per line (``-1`` = unlabeled).  The optional mask file is an
    (N, V) CSV of 0/1 flags, column order matching ``view_paths``.
    Features are z-scored per column over observed rows; masked rows are
    zeroed.
    """
    views = []
    for p in view_paths:
        x = np.loadtxt(p, delimiter=",", dtype=np.float64, ndmin=2)
        views.append(x)
    n = views[0].shape[0]
    for p, x in zip(view_paths, views):
        if x.shape[0] != n:
            raise ValueError(f"view {p} has {x.shape[0]} rows, expected {n}")
    labels = np.loadtxt(label_path, dtype=np.int64, ndmin=1)
    if labels.shape != (n,):
        raise ValueError(f"label file must have {n} rows, got {labels.shape}")
    mask = None
    if mask_path is not None:
        raw = np.loadtxt(mask_path, delimiter=",", ndmin=2)
        if raw.shape != (n, len(views)):
            raise ValueError(f"mask file must be (N, V)=({n}, {len(views)}), got {raw.shape}")
        if not np.all(np.isin(raw, (0, 1))):
            raise ValueError("mask file entries must be 0 or 1")
        mask = raw.astype(bool)
        for v in range(len(views)):
            views[v][~mask[:, v]] = 0.0
    return from_arrays(views, labels, mask=mask)


def generate_mask(dataset: MultiViewDataset, spec: MaskSpec) -> MultiViewDataset:
    """Return a copy with additional view-rows masked out and zeroed.

    Exactly ``floor(rate_v * N)`` currently observed rows are removed per
    view.  Removal sets are sampled so every instance keeps at least one
    observed view; draws are constrained to rows with two or more
    currently observed views, with whole-assignment retries up to
    ``spec.max_retries``.  Raises ValueError when no valid assignment
    exists or the retry budget is exhausted.
    """
    n = dataset.n_instances
    nv = dataset.n_views
    if len(spec.missing_rates) != nv:
        raise ValueError(f"need {nv} missing rates, got {len(spec.missing_rates)}")
    counts = [int(np.floor(r * n)) for r in spec.missing_rates]
    if sum(counts) > n * (nv - 1):
        raise ValueError(
            f"infeasible mask: removing {sum(counts)} view-rows from {n} instances "
            f"x {nv} views cannot keep every instance observed somewhere"
        )
    base = dataset.mask.copy()
    for v, c in enumerate(counts):
        if c > int(base[:, v].sum()) - 0:
            raise ValueError(f"view {v}: cannot remove {c} rows, only {int(base[:, v].sum())} observed")
    rng = np.random.default_rng(spec.seed)
    for _ in range(spec.max_retries):
        mask = base.copy()
        ok = True
        for v, c in enumerate(counts):
            if c == 0:
                continue
            candidates = np.flatnonzero(mask[:, v] & (mask.sum(axis=1) >= 2))
            if candidates.size < c:
                ok = False
                break
            chosen = rng.choice(candidates, size=c, replace=False)
            mask[chosen, v] = False
        if ok:
            out = dataset.copy()
            out.mask = mask
            for v in range(nv):
                out.views[v][~mask[:, v]] = 0.0
            out.validate()
            return out
    raise ValueError(f"mask generation failed after {spec.max_retries} retries")


def generate_split(dataset: MultiViewDataset, spec: SplitSpec) -> MultiViewDataset:
    """Return a copy with a fresh labeled/unlabeled partition.

    Requires full ground-truth labels.  The labeled count is
    ``floor(rate * N + 0.5)``; stratified mode allocates per class by
    largest remainder with a one-instance floor, then samples within
    classes.  Raises ValueError when the budget cannot cover all classes.
    """
    if np.any(dataset.labels < 0):
        raise ValueError("split generation requires known labels for all instances")
    n = dataset.n_instances
    c = dataset.n_classes
    n_lab = int(np.floor(spec.labeled_rate * n + 0.5))
    n_lab = min(max(n_lab, 0), n)
    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        if n_lab < c:
            raise ValueError(f"labeled budget {n_lab} cannot cover {c} classes")
        class_rows = [np.flatnonzero(dataset.labels == k) for k in range(c)]
        sizes = np.array([rows.size for rows in class_rows], dtype=np.int64)
        if np.any(sizes == 0):
            raise ValueError("every class must appear in the data")
        exact = n_lab * sizes / n
        alloc = np.maximum(np.floor(exact).astype(np.int64), 1)
        alloc = np.minimum(alloc, sizes)
        # Largest-remainder top-up toward the exact budget; ties broken by
        # class index via stable sort.
        while alloc.sum() < n_lab:
            room = alloc < sizes
            if not room.any():
                break
            frac = np.where(room, exact - alloc, -np.inf)
            alloc[int(np.argmax(frac))] += 1
        while alloc.sum() > n_lab:
            over = alloc > 1
            if not over.any():
                raise ValueError(f"labeled budget {n_lab} cannot cover {c} classes")
            frac = np.where(over, exact - alloc, np.inf)
            alloc[int(np.argmin(frac))] -= 1
        picked = []
        for k in range(c):
            picked.append(rng.choice(class_rows[k], size=int(alloc[k]), replace=False))
        labeled = np.sort(np.concatenate(picked)).astype(np.int64)
    else:
        if n_lab == 0:
            raise ValueError("labeled budget is zero")
        labeled = np.sort(rng.choice(n, size=n_lab, replace=False)).astype(np.int64)
    out = dataset.copy()
    out.labeled_idx = labeled
    out.unlabeled_idx = np.setdiff1d(np.arange(n, dtype=np.int64), labeled)
    out.validate()
    return out


def save_dataset_csv(dataset: MultiViewDataset, out_dir: str | Path, prefix: str = "") -> dict[str, Path]:
    """Write views/labels/mask as the CSV formats accepted by load_dataset."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    for v, x in enumerate(dataset.views):
        p = out_dir / f"{prefix}view{v}.csv"
        np.savetxt(p, x, delimiter=",", fmt="%.17g")
        paths[f"view{v}"] = p
    p = out_dir / f"{prefix}labels.csv"
    np.savetxt(p, dataset.labels, fmt="%d")
    paths["labels"] = p
    p = out_dir / f"{prefix}mask.csv"
    np.savetxt(p, dataset.mask.astype(np.int64), delimiter=",", fmt="%d")
    paths["mask"] = p
    return paths
