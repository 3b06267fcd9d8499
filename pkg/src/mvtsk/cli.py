"""Command-line interface.

Subcommands: ``run`` (config-driven experiment grid), ``stats``
(Friedman/Holm report from an accuracy table), ``impute`` (kNN baseline),
``rules`` (export a trained rule base), ``fit`` / ``predict`` (single
model), ``bench`` (backend comparison).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import backend, bench
from .config import apply_override, config_from_mapping, make_hyperparams
from .data import load_dataset, save_dataset_csv
from .experiment import run_experiment
from .fuzzy import export_rules, rules_to_json
from .impute import ImputeSpec, knn_impute
from .solver import (
    ABLATIONS,
    fit,
    load_checkpoint,
    predict_inductive,
    predict_transductive,
    save_checkpoint,
    transductive_accuracy,
    write_trace_csv,
)
from .stats import format_report, friedman_holm, load_trial_matrix, write_report


def _comma_list(text: str) -> list[str]:
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _cmd_run(args: argparse.Namespace) -> int:
    raw = yaml.safe_load(Path(args.config).read_text()) or {}
    for item in args.set or []:
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        apply_override(raw, key, value)
    if args.seed is not None:
        apply_override(raw, "protocol.base_seed", str(args.seed))
    if args.out_dir is not None:
        apply_override(raw, "output.dir", args.out_dir)
    if args.ablation is not None:
        apply_override(raw, "protocol.ablations", "[" + args.ablation + "]")
    config = config_from_mapping(raw)
    trials, paths = run_experiment(config)
    n_err = sum(1 for t in trials if not t.ok)
    print(f"ran {len(trials)} trials ({n_err} errored); results in {config.out_dir}")
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return 0 if n_err == 0 else 2


def _cmd_stats(args: argparse.Namespace) -> int:
    matrix = load_trial_matrix(args.input)
    report = friedman_holm(matrix, control=args.control, alpha=args.alpha)
    sys.stdout.write(format_report(report))
    if args.out_dir is not None:
        paths = write_report(report, args.out_dir)
        for name, path in paths.items():
            print(f"wrote {name}: {path}")
    return 0


def _cmd_impute(args: argparse.Namespace) -> int:
    ds = load_dataset(_comma_list(args.views), args.labels, args.mask)
    completed = knn_impute(ds, ImputeSpec(k=args.k, weighting=args.weighting))
    paths = save_dataset_csv(completed, args.out_dir, prefix="imputed_")
    for name, path in sorted(paths.items()):
        print(f"wrote {name}: {path}")
    return 0


def _cmd_rules(args: argparse.Namespace) -> int:
    model = load_checkpoint(args.checkpoint)
    class_names = _comma_list(args.class_names) if args.class_names else None
    sections = []
    records = []
    for v in range(len(model.view_dims)):
        text, recs = export_rules(
            model.rule_bases[v],
            model.state.consequents[v],
            class_names=class_names,
        )
        sections.append(f"# View {v}\n\n{text}")
        records.append({"view": v, "rules": recs})
    rendered = "\n".join(sections)
    if args.out is None:
        sys.stdout.write(rendered)
    else:
        Path(args.out).write_text(rendered)
        print(f"wrote rules: {args.out}")
    if args.json is not None:
        Path(args.json).write_text(rules_to_json(records))
        print(f"wrote rules JSON: {args.json}")
    return 0


def _add_hyperparam_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta1", type=float, default=1.0)
    p.add_argument("--beta2", type=float, default=1.0)
    p.add_argument("--beta3", type=float, default=1.0)
    p.add_argument("--beta4", type=float, default=1.0)
    p.add_argument("--beta5", type=float, default=1.0)
    p.add_argument("--n-rules", type=int, default=4)
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--k-neighbors", type=int, default=7)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--width-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ablation", choices=ABLATIONS, default="full")


def _cmd_fit(args: argparse.Namespace) -> int:
    ds = load_dataset(_comma_list(args.views), args.labels, args.mask)
    cell = {
        "beta1": args.beta1,
        "beta2": args.beta2,
        "beta3": args.beta3,
        "beta4": args.beta4,
        "beta5": args.beta5,
        "n_rules": args.n_rules,
        "iterations": args.iterations,
        "k_neighbors": args.k_neighbors,
        "tolerance": args.tolerance,
        "width_scale": args.width_scale,
    }
    hp = make_hyperparams(cell, seed=args.seed, ablation=args.ablation)
    model = fit(ds, hp, freeze_graphs=args.freeze_graphs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "checkpoint.npz"
    save_checkpoint(model, ckpt)
    write_trace_csv(model, out / "trace.csv")
    idx, preds = predict_transductive(model)
    with open(out / "predictions.csv", "w") as fh:
        fh.write("index,prediction\n")
        for i, p in zip(idx, preds):
            fh.write(f"{i},{p}\n")
    known = ds.labels[idx] >= 0
    if known.any():
        acc = transductive_accuracy(model, ds.labels)
        print(f"transductive accuracy on scored unlabeled rows: {acc:.4f}")
    print(f"wrote checkpoint: {ckpt}")
    print(f"wrote trace: {out / 'trace.csv'}")
    print(f"wrote predictions: {out / 'predictions.csv'}")
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    model = load_checkpoint(args.checkpoint)
    if args.views:
        views = [
            np.loadtxt(p, delimiter=",", dtype=np.float64, ndmin=2)
            for p in _comma_list(args.views)
        ]
        preds = predict_inductive(model, views)
        idx = np.arange(preds.size)
    else:
        idx, preds = predict_transductive(model)
    with open(args.out, "w") as fh:
        fh.write("index,prediction\n")
        for i, p in zip(idx, preds):
            fh.write(f"{i},{p}\n")
    print(f"wrote predictions: {args.out}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    sizes = tuple(int(s) for s in _comma_list(args.sizes))
    rows = bench.run_benchmark(
        sizes=sizes,
        iterations=args.iterations,
        repeats=args.repeats,
        seed=args.seed,
    )
    sys.stdout.write(f"active backend: {backend.NAME}\n")
    sys.stdout.write(bench.format_rows(rows))
    if args.out is not None:
        bench.write_rows(rows, args.out)
        print(f"wrote benchmark CSV: {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvtsk",
        description="Transductive semi-supervised TSK classification of incomplete multi-view data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a config-driven experiment grid")
    p.add_argument("--config", required=True, help="YAML experiment config")
    p.add_argument("--seed", type=int, default=None, help="override protocol.base_seed")
    p.add_argument("--out-dir", default=None, help="override output.dir")
    p.add_argument("--ablation", default=None, help="comma list overriding protocol.ablations")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key by dotted path, value parsed as YAML")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("stats", help="Friedman test + Holm post-hoc from an accuracy table")
    p.add_argument("--input", required=True, help="CSV: header datasets, rows algorithm,accuracies")
    p.add_argument("--control", default=None, help="control algorithm (default: best average rank)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out-dir", default=None, help="write friedman.csv / friedman.txt here")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("impute", help="kNN-impute missing view rows")
    p.add_argument("--views", required=True, help="comma list of view CSVs")
    p.add_argument("--labels", required=True)
    p.add_argument("--mask", required=True, help="0/1 observation mask CSV")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--weighting", choices=("uniform", "inverse"), default="uniform")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_impute)

    p = sub.add_parser("rules", help="export a trained model's fuzzy rules")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default=None, help="text output path (default: stdout)")
    p.add_argument("--json", default=None, help="also write machine-readable JSON here")
    p.add_argument("--class-names", default=None, help="comma list of class names")
    p.set_defaults(func=_cmd_rules)

    p = sub.add_parser("fit", help="train one model and save a checkpoint")
    p.add_argument("--views", required=True, help="comma list of view CSVs")
    p.add_argument("--labels", required=True, help="one label per line, -1 = unlabeled")
    p.add_argument("--mask", default=None, help="optional 0/1 observation mask CSV")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--freeze-graphs", action="store_true")
    _add_hyperparam_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="predict from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--views", default=None,
                   help="comma list of view CSVs for inductive prediction "
                        "(omit for transductive pseudo-label decisions)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--sizes", default="200,400")
    p.add_argument("--iterations", type=int, default=3)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="optional CSV output")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
