"""Experiment configuration: YAML loading, overrides, and grid expansion.

A config file has four sections::

    dataset:
      views: [view0.csv, view1.csv]
      labels: labels.csv
      mask: null                  # optional fixed mask CSV
    protocol:
      missing_rates: [0.5]
      labeled_rates: [0.3]
      repeats: 20
      base_seed: 0
      ablations: [full]
      stratified: true
    model:                        # any value may be a list -> grid cell axis
      beta1: 1.0
      n_rules: 4
    selection:
      mode: none                  # none | holdout
      holdout_fraction: 0.2
    output:
      dir: results

Model keys default to the Hyperparams defaults.  Flags override any key
via dotted paths (``model.beta1=0.5``); values are parsed as YAML.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .solver import ABLATIONS, Hyperparams

_GRIDDABLE = (
    "beta1",
    "beta2",
    "beta3",
    "beta4",
    "beta5",
    "n_rules",
    "iterations",
    "k_neighbors",
    "tolerance",
    "width_scale",
)


@dataclass
class ExperimentConfig:
    """Everything one `run` invocation needs."""

    view_paths: list[str]
    label_path: str
    mask_path: str | None = None
    missing_rates: list[float] = field(default_factory=lambda: [0.5])
    labeled_rates: list[float] = field(default_factory=lambda: [0.3])
    repeats: int = 20
    base_seed: int = 0
    ablations: list[str] = field(default_factory=lambda: ["full"])
    stratified: bool = True
    model: dict[str, Any] = field(default_factory=dict)
    selection_mode: str = "none"
    holdout_fraction: float = 0.2
    out_dir: str = "results"

    def __post_init__(self) -> None:
        if not self.view_paths:
            raise ValueError("config needs at least one view path")
        if not self.missing_rates or not self.labeled_rates:
            raise ValueError("rate grids must be nonempty")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not self.ablations:
            raise ValueError("ablation list must be nonempty")
        for a in self.ablations:
            if a not in ABLATIONS:
                raise ValueError(f"unknown ablation {a!r}; choose from {ABLATIONS}")
        if self.selection_mode not in ("none", "holdout"):
            raise ValueError("selection mode must be none or holdout")
        if not 0 < self.holdout_fraction < 1:
            raise ValueError("holdout_fraction must be in (0, 1)")
        for key in self.model:
            if key not in _GRIDDABLE:
                raise ValueError(f"unknown model key {key!r}")


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a YAML config file into an ExperimentConfig."""
    raw = yaml.safe_load(Path(path).read_text()) or {}
    return config_from_mapping(raw)


def config_from_mapping(raw: dict[str, Any]) -> ExperimentConfig:
    dataset = raw.get("dataset") or {}
    protocol = raw.get("protocol") or {}
    model = raw.get("model") or {}
    selection = raw.get("selection") or {}
    output = raw.get("output") or {}
    views = dataset.get("views") or []
    return ExperimentConfig(
        view_paths=[str(v) for v in views],
        label_path=str(dataset.get("labels", "")),
        mask_path=(None if dataset.get("mask") in (None, "") else str(dataset["mask"])),
        missing_rates=[float(r) for r in protocol.get("missing_rates", [0.5])],
        labeled_rates=[float(r) for r in protocol.get("labeled_rates", [0.3])],
        repeats=int(protocol.get("repeats", 20)),
        base_seed=int(protocol.get("base_seed", 0)),
        ablations=[str(a) for a in protocol.get("ablations", ["full"])],
        stratified=bool(protocol.get("stratified", True)),
        model=dict(model),
        selection_mode=str(selection.get("mode", "none")),
        holdout_fraction=float(selection.get("holdout_fraction", 0.2)),
        out_dir=str(output.get("dir", "results")),
    )


def apply_override(raw: dict[str, Any], dotted_key: str, value: str) -> None:
    """Set ``section.key`` in a raw config mapping; value parsed as YAML."""
    parts = dotted_key.split(".")
    if len(parts) < 2:
        raise ValueError(f"override key must be dotted (section.key), got {dotted_key!r}")
    node = raw
    for p in parts[:-1]:
        nxt = node.get(p)
        if nxt is None:
            nxt = {}
            node[p] = nxt
        if not isinstance(nxt, dict):
            raise ValueError(f"cannot descend into non-mapping config node {p!r}")
        node = nxt
    node[parts[-1]] = yaml.safe_load(value)


def hyperparam_cells(model: dict[str, Any]) -> list[dict[str, Any]]:
    """Expand list-valued model keys into a Cartesian grid of cells.

    Cell order follows the key order in the mapping, last key fastest.
    Scalar values apply to every cell.
    """
    axes: list[tuple[str, list[Any]]] = []
    fixed: dict[str, Any] = {}
    for key, value in model.items():
        if isinstance(value, (list, tuple)):
            if not value:
                raise ValueError(f"model grid axis {key!r} is empty")
            axes.append((key, list(value)))
        else:
            fixed[key] = value
    if not axes:
        return [dict(fixed)]
    cells = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        cell = dict(fixed)
        for (key, _), val in zip(axes, combo):
            cell[key] = val
        cells.append(cell)
    return cells


def cell_label(cell: dict[str, Any], grid_keys: list[str]) -> str:
    """Short stable label naming a cell by its gridded coordinates."""
    if not grid_keys:
        return "default"
    return ",".join(f"{k}={cell[k]}" for k in grid_keys)


def grid_axis_keys(model: dict[str, Any]) -> list[str]:
    return [k for k, v in model.items() if isinstance(v, (list, tuple))]


def make_hyperparams(cell: dict[str, Any], seed: int, ablation: str) -> Hyperparams:
    """Hyperparams for one trial from a grid cell plus trial coordinates."""
    kw = dict(cell)
    kw["seed"] = seed
    kw["ablation"] = ablation
    return Hyperparams(**kw)


def trial_seed(
    base_seed: int,
    missing_rate: float,
    labeled_rate: float,
    repeat: int,
    ablation: str,
) -> int:
    """Deterministic per-trial seed from base seed and cell coordinates."""
    key = f"{base_seed}|{missing_rate:.6f}|{labeled_rate:.6f}|{repeat}|{ablation}"
    digest = hashlib.sha256(key.encode()).digest()
    return int.from_bytes(digest[:8], "big")
