"""Friedman rank test with Holm step-down post-hoc comparisons.

Input is a matrix of accuracies, one row per algorithm and one column
per dataset.  Algorithms are ranked per dataset (rank 1 = best accuracy,
ties averaged), the Friedman chi-square statistic is computed from the
average ranks, and each non-control algorithm is compared against the
control by the normal approximation of rank differences with Holm's
step-down multiple-comparison correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .special import chi2_sf, normal_sf


@dataclass
class TrialMatrix:
    """Accuracy table: ``values[i, j]`` = algorithm i on dataset j."""

    algorithms: list[str]
    datasets: list[str]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.algorithms), len(self.datasets)):
            raise ValueError(
                f"values must be ({len(self.algorithms)}, {len(self.datasets)}), "
                f"got {self.values.shape}"
            )
        if len(self.algorithms) < 2:
            raise ValueError("need at least two algorithms")
        if len(self.datasets) < 1:
            raise ValueError("need at least one dataset")


@dataclass
class HolmRow:
    """One control-vs-algorithm comparison in Holm order."""

    index: int
    algorithm: str
    z: float
    p_value: float
    threshold: float
    reject: bool


@dataclass
class FriedmanReport:
    """Friedman test summary plus Holm post-hoc rows (sorted by descending |z|)."""

    algorithms: list[str]
    datasets: list[str]
    average_ranks: np.ndarray
    chi_square: float
    degrees_of_freedom: int
    p_value: float
    control: str
    alpha: float
    holm: list[HolmRow]


def load_trial_matrix(path: str | Path) -> TrialMatrix:
    """Read an accuracy table from CSV.

    First header cell is ignored; remaining header cells are dataset
    names.  Each following row is an algorithm name and its accuracies.
    """
    lines = Path(path).read_text().strip().splitlines()
    if len(lines) < 3:
        raise ValueError("need a header row and at least two algorithm rows")
    header = [c.strip() for c in lines[0].split(",")]
    datasets = header[1:]
    algorithms = []
    rows = []
    for line in lines[1:]:
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(datasets) + 1:
            raise ValueError(f"row {cells[0]!r} has {len(cells) - 1} values, expected {len(datasets)}")
        algorithms.append(cells[0])
        rows.append([float(c) for c in cells[1:]])
    return TrialMatrix(algorithms=algorithms, datasets=datasets, values=np.array(rows))


def _rank_column_desc(values: np.ndarray) -> np.ndarray:
    """Ranks with 1 = largest value; equal values share the average rank."""
    order = np.argsort(-values, kind="stable")
    ranks = np.empty(values.size)
    pos = 0
    while pos < values.size:
        end = pos
        while end + 1 < values.size and values[order[end + 1]] == values[order[pos]]:
            end += 1
        avg = (pos + end) / 2.0 + 1.0
        ranks[order[pos : end + 1]] = avg
        pos = end + 1
    return ranks


def average_ranks(matrix: TrialMatrix) -> np.ndarray:
    """Per-algorithm rank averaged over datasets (1 = best)."""
    cols = [_rank_column_desc(matrix.values[:, j]) for j in range(len(matrix.datasets))]
    return np.mean(np.stack(cols, axis=1), axis=1)


def holm_test(
    ranks: Sequence[float] | np.ndarray,
    n_datasets: int,
    algorithms: Sequence[str] | None = None,
    control: int | str | None = None,
    alpha: float = 0.05,
) -> list[HolmRow]:
    """Holm step-down comparisons of average ranks against a control.

    ``ranks`` are per-algorithm ranks averaged over ``n_datasets``
    datasets (1 = best).  The control defaults to the best (lowest)
    rank, ties to the earlier index.  With k algorithms the standard
    error is sqrt(k(k+1)/(6n)); z = (R_i - R_control)/SE with two-sided
    normal p-values.  Comparison i (counting k-1 down to 1 in order of
    decreasing |z|, ties by input order) is rejected while its p-value
    is at most alpha/i; the first non-rejection stops the procedure.
    """
    ranks = np.asarray(ranks, dtype=np.float64)
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if n_datasets < 1:
        raise ValueError(f"n_datasets must be positive, got {n_datasets}")
    k = ranks.size
    if k < 2:
        raise ValueError("need at least two algorithms")
    if algorithms is None:
        algorithms = [f"algorithm_{i}" for i in range(k)]
    elif len(algorithms) != k:
        raise ValueError(f"expected {k} algorithm names, got {len(algorithms)}")
    if control is None:
        control_idx = int(np.argmin(ranks))
    elif isinstance(control, str):
        if control not in algorithms:
            raise ValueError(f"control {control!r} not among algorithms")
        control_idx = list(algorithms).index(control)
    else:
        control_idx = int(control)
        if not 0 <= control_idx < k:
            raise ValueError(f"control index {control_idx} out of range")
    se = math.sqrt(k * (k + 1) / (6.0 * n_datasets))
    others = [i for i in range(k) if i != control_idx]
    zs = {i: float(ranks[i] - ranks[control_idx]) / se for i in others}
    order = sorted(others, key=lambda i: (-abs(zs[i]), i))
    rows: list[HolmRow] = []
    stopped = False
    for m, i in enumerate(order):
        idx = k - 1 - m
        p_i = 2.0 * normal_sf(abs(zs[i]))
        threshold = alpha / idx
        reject = (not stopped) and p_i <= threshold
        if not reject:
            stopped = True
        rows.append(
            HolmRow(
                index=idx,
                algorithm=algorithms[i],
                z=float(zs[i]),
                p_value=float(p_i),
                threshold=float(threshold),
                reject=bool(reject),
            )
        )
    return rows


def friedman_holm(
    matrix: TrialMatrix,
    control: str | None = None,
    alpha: float = 0.05,
) -> FriedmanReport:
    """Friedman test over the matrix plus Holm comparisons against a control.

    The control defaults to the algorithm with the best (lowest) average
    rank, ties to the earlier row.  Comparison i (counting k-1 down to 1
    in order of decreasing |z|) is rejected while its two-sided p-value
    is at most alpha/i; the first non-rejection stops the procedure.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    k = len(matrix.algorithms)
    n = len(matrix.datasets)
    ranks = average_ranks(matrix)
    chi = 12.0 * n / (k * (k + 1)) * float(np.sum(ranks**2)) - 3.0 * n * (k + 1)
    chi = max(chi, 0.0)
    df = k - 1
    p = chi2_sf(chi, df)
    if control is None:
        control_idx = int(np.argmin(ranks))
    else:
        if control not in matrix.algorithms:
            raise ValueError(f"control {control!r} not among algorithms")
        control_idx = matrix.algorithms.index(control)
    holm = holm_test(
        ranks,
        n,
        algorithms=matrix.algorithms,
        control=control_idx,
        alpha=alpha,
    )
    return FriedmanReport(
        algorithms=list(matrix.algorithms),
        datasets=list(matrix.datasets),
        average_ranks=ranks,
        chi_square=float(chi),
        degrees_of_freedom=df,
        p_value=float(p),
        control=matrix.algorithms[control_idx],
        alpha=alpha,
        holm=holm,
    )


def accuracy(predictions: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of matching entries."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape or predictions.size == 0:
        raise ValueError("predictions and truth must be equal-length nonempty vectors")
    return float(np.mean(predictions == truth))


def format_report(report: FriedmanReport) -> str:
    """Human-readable rendering of the test and the Holm table."""
    lines = [
        f"Friedman test: {len(report.algorithms)} algorithms on {len(report.datasets)} datasets",
        f"chi-square = {report.chi_square:.6f}, df = {report.degrees_of_freedom}, "
        f"p = {report.p_value:.6g}",
        "",
        "Average ranks (1 = best):",
    ]
    width = max(len(a) for a in report.algorithms)
    order = np.argsort(report.average_ranks, kind="stable")
    for i in order:
        lines.append(f"  {report.algorithms[i]:<{width}}  {report.average_ranks[i]:.6g}")
    lines.append("")
    lines.append(f"Holm post-hoc vs control {report.control} (alpha = {report.alpha:g}):")
    lines.append(f"  {'i':>2}  {'comparison':<{width + 12}} {'z':>10} {'p':>10} {'alpha/i':>10}  decision")
    for row in report.holm:
        comp = f"{row.algorithm} vs {report.control}"
        decision = "Reject" if row.reject else "Not Reject"
        lines.append(
            f"  {row.index:>2}  {comp:<{width + 12}} {row.z:>10.6f} {row.p_value:>10.6f} "
            f"{row.threshold:>10.6f}  {decision}"
        )
    return "\n".join(lines) + "\n"


def write_report(report: FriedmanReport, out_dir: str | Path) -> dict[str, Path]:
    """Write the report as CSV (per-comparison rows) and aligned text."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "friedman.csv"
    with open(csv_path, "w") as fh:
        fh.write("algorithm,average_rank,holm_index,z,p_value,holm_threshold,decision\n")
        ctrl_rank = report.average_ranks[report.algorithms.index(report.control)]
        fh.write(f"{report.control},{ctrl_rank!r},,,,,control\n")
        for row in report.holm:
            rank = report.average_ranks[report.algorithms.index(row.algorithm)]
            decision = "Reject" if row.reject else "Not Reject"
            fh.write(
                f"{row.algorithm},{rank!r},{row.index},{row.z!r},{row.p_value!r},"
                f"{row.threshold!r},{decision}\n"
            )
    txt_path = out_dir / "friedman.txt"
    txt_path.write_text(
        format_report(report)
        + f"\nFriedman chi-square = {report.chi_square!r}, p = {report.p_value!r}\n"
    )
    return {"csv": csv_path, "txt": txt_path}
