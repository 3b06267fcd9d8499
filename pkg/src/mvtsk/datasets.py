"""Bundled dataset constructors: the UCI dermatology table and synthetic blobs.

The dermatology file is not redistributed here; point
``load_dermatology`` at a local copy of the published comma-separated
file (one row per patient: 34 attributes then the class in 1..6, age
possibly ``?``).
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .data import MultiViewDataset, from_arrays

DERMATOLOGY_ENV = "MVTSK_DERMATOLOGY"
DERMATOLOGY_DEFAULT = Path("data") / "dermatology.data"

# Attribute layout of the published file: 1-11 clinical, 12-33
# histopathological, 34 age (clinical).  Views are ordered largest first.
_HISTO_COLS = list(range(11, 33))
_CLINICAL_COLS = list(range(0, 11)) + [33]


def find_dermatology_file(path: str | Path | None = None) -> Path | None:
    """Resolve the dermatology data file: explicit path, env var, default."""
    candidates = []
    if path is not None:
        candidates.append(Path(path))
    env = os.environ.get(DERMATOLOGY_ENV)
    if env:
        candidates.append(Path(env))
    candidates.append(DERMATOLOGY_DEFAULT)
    for c in candidates:
        if c.is_file():
            return c
    return None


def load_dermatology(path: str | Path) -> MultiViewDataset:
    """Load the dermatology table as a two-view dataset.

    View 0 holds the 22 histopathological attributes, view 1 the 11
    clinical attributes plus age.  Unknown ages (``?``) are replaced by
    the mean of the known ones before normalization.  Classes 1..6 map
    to 0..5.  All instances are complete and labeled; apply
    generate_mask/generate_split for experiment protocols.
    """
    rows = []
    for line in Path(path).read_text().strip().splitlines():
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 35:
            raise ValueError(f"expected 35 fields per row, got {len(cells)}")
        rows.append(cells)
    raw = np.empty((len(rows), 34))
    labels = np.empty(len(rows), dtype=np.int64)
    for i, cells in enumerate(rows):
        for j in range(34):
            raw[i, j] = np.nan if cells[j] == "?" else float(cells[j])
        labels[i] = int(cells[34]) - 1
    age = raw[:, 33]
    known = np.isfinite(age)
    if not known.any():
        raise ValueError("all ages unknown")
    raw[~known, 33] = age[known].mean()
    if np.isnan(raw).any():
        raise ValueError("unexpected missing values outside the age column")
    if labels.min() < 0 or labels.max() > 5:
        raise ValueError("classes must be in 1..6")
    views = [raw[:, _HISTO_COLS], raw[:, _CLINICAL_COLS]]
    return from_arrays(views, labels)


def make_synthetic_blobs(
    n_instances: int,
    n_views: int = 2,
    n_classes: int = 3,
    dim_per_view: int = 8,
    separation: float = 3.0,
    seed: int = 0,
) -> MultiViewDataset:
    """Complete labeled dataset of Gaussian class blobs, one blob set per view.

    Class centers are drawn standard-normal and scaled by ``separation``;
    instances add unit-variance noise.  Classes are balanced up to
    remainder and rows are shuffled.
    """
    if n_classes < 2 or n_instances < n_classes:
        raise ValueError("need at least two classes and one instance per class")
    rng = np.random.default_rng(seed)
    per = np.full(n_classes, n_instances // n_classes, dtype=np.int64)
    per[: n_instances - int(per.sum())] += 1
    labels = np.repeat(np.arange(n_classes, dtype=np.int64), per)
    order = rng.permutation(n_instances)
    labels = labels[order]
    views = []
    for _ in range(n_views):
        centers = separation * rng.normal(size=(n_classes, dim_per_view))
        x = centers[labels] + rng.normal(size=(n_instances, dim_per_view))
        views.append(x)
    return from_arrays(views, labels)
