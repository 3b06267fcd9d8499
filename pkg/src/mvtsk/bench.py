"""Wall-time comparison of the kernel backends on synthetic data."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

from . import backend
from .data import MaskSpec, SplitSpec, generate_mask, generate_split
from .datasets import make_synthetic_blobs
from .solver import Hyperparams, fit


@dataclass
class BenchRow:
    backend: str
    n_instances: int
    iterations: int
    seconds_per_fit: float
    seconds_per_iteration: float


def _problem(n: int, seed: int):
    ds = make_synthetic_blobs(n, n_views=2, n_classes=3, dim_per_view=16, seed=seed)
    ds = generate_mask(ds, MaskSpec(missing_rates=[0.5, 0.5], seed=seed))
    return generate_split(ds, SplitSpec(labeled_rate=0.3, seed=seed + 1))


def run_benchmark(
    sizes: tuple[int, ...] = (200, 400),
    iterations: int = 3,
    repeats: int = 3,
    seed: int = 0,
    backends: list[str] | None = None,
) -> list[BenchRow]:
    """Median fit time per backend and problem size.

    Identical problems are fed to every backend; ``tolerance=0`` keeps
    iteration counts fixed so timings are comparable.
    """
    if backends is None:
        backends = backend.available_backends()
    rows = []
    for n in sizes:
        ds = _problem(n, seed)
        hp = Hyperparams(iterations=iterations, tolerance=0.0, seed=seed)
        for name in backends:
            with backend.use_backend(name):
                times = []
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    fit(ds, hp)
                    times.append(time.perf_counter() - t0)
            times.sort()
            med = times[len(times) // 2]
            rows.append(
                BenchRow(
                    backend=name,
                    n_instances=n,
                    iterations=iterations,
                    seconds_per_fit=med,
                    seconds_per_iteration=med / iterations,
                )
            )
    return rows


def format_rows(rows: list[BenchRow]) -> str:
    lines = [f"{'backend':<10} {'N':>6} {'iters':>6} {'s/fit':>10} {'s/iter':>10}"]
    for r in rows:
        lines.append(
            f"{r.backend:<10} {r.n_instances:>6} {r.iterations:>6} "
            f"{r.seconds_per_fit:>10.4f} {r.seconds_per_iteration:>10.4f}"
        )
    return "\n".join(lines) + "\n"


def write_rows(rows: list[BenchRow], path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write("backend,n_instances,iterations,seconds_per_fit,seconds_per_iteration\n")
        for r in rows:
            fh.write(
                f"{r.backend},{r.n_instances},{r.iterations},"
                f"{r.seconds_per_fit!r},{r.seconds_per_iteration!r}\n"
            )
