"""Command line entry point: ``splitsr fit | predict | score-gen | bench | simplify | export``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import bench, clinical
from .config import PROFILES, SearchConfig, profile
from .data import Dataset, SplitSpec, load_csv, split
from .errors import SplitSRError
from .metrics import auprc, balanced_accuracy, log_loss_per_row, mse, r2
from .search import run
from .serialize import dumps, from_document, to_document, to_infix, to_pseudocode
from .simplify import build_index, sample_rows, simplify_program
from .tree import evaluate, linear_complexity

log = logging.getLogger("splitsr")

WORKERS_ENV = "SPLITSR_WORKERS"

# flag name -> SearchConfig field
_CONFIG_FLAGS = {
    "pop_size": "pop_size", "max_gens": "max_gens", "max_depth": "max_depth",
    "max_size": "max_size", "lm_iterations": "lm_iterations", "functions": "functions",
    "crossover_prob": "crossover_prob", "split_seeded_init": "split_seeded_init",
    "validation_fraction": "validation_fraction", "split_criterion": "split_criterion",
    "simplify": "simplify", "simplify_tol": "simplify_tol", "time_limit": "time_limit",
}


class UsageError(Exception):
    """Bad input or flags; reported with exit status 2."""


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    p.add_argument("--json", action="store_true", help="print a machine-readable summary")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default ${WORKERS_ENV} or 1)")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_config(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=sorted(PROFILES), default="clinical")
    p.add_argument("--config", type=Path, help="JSON file of SearchConfig fields")
    g = p.add_argument_group("search overrides (take precedence over --config)")
    g.add_argument("--pop-size", type=int)
    g.add_argument("--max-gens", type=int)
    g.add_argument("--max-depth", type=int)
    g.add_argument("--max-size", type=int)
    g.add_argument("--lm-iterations", type=int)
    g.add_argument("--functions", type=_csv_list, help="comma separated; 'split' adds both split kinds")
    g.add_argument("--crossover-prob", type=float)
    g.add_argument("--split-seeded-init", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--validation-fraction", type=float)
    g.add_argument("--split-criterion", choices=("weighted", "per_count"))
    g.add_argument("--simplify", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--simplify-tol", type=float)
    g.add_argument("--time-limit", type=float, help="wall-clock seconds; breaks bit-reproducibility")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splitsr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="evolve a model on a CSV")
    p.add_argument("csv", type=Path)
    p.add_argument("--target", required=True)
    p.add_argument("--task", choices=("regression", "classification"), default="regression")
    p.add_argument("--exclude", type=_csv_list, default=[], help="columns to ignore")
    p.add_argument("--test-csv", type=Path, help="held-out rows; otherwise a 75/25 split is made")
    p.add_argument("--out", type=Path, default=Path("model"))
    p.add_argument("--progress", action="store_true", help="write per-generation records to progress.jsonl")
    _add_config(p)
    _add_common(p)

    p = sub.add_parser("predict", help="apply a model document to a CSV")
    p.add_argument("model", type=Path)
    p.add_argument("csv", type=Path)
    p.add_argument("--out", type=Path, help="output CSV (default stdout)")
    p.add_argument("--column", default="prediction")
    _add_common(p)

    p = sub.add_parser("score-gen", help="generate a synthetic clinical CSV")
    p.add_argument("system", type=str.upper, choices=("MAP", "CART", "MEWS"))
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--prevalence", type=float)
    p.add_argument("--distractors", type=int, default=5)
    p.add_argument("--out", type=Path, required=True)
    _add_common(p)

    p = sub.add_parser("bench", help="run a problem suite")
    p.add_argument("--suite", type=Path, required=True, help="directory of CSV problems")
    p.add_argument("--generate", choices=("clinical", "ground-truth"),
                   help="write a built-in suite into --suite first")
    p.add_argument("--rows", type=int, help="rows per generated problem")
    p.add_argument("--noise", type=lambda s: [float(v) for v in _csv_list(s)], default=[0.0])
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--variant", action="append", default=[], metavar="NAME=JSON",
                   help="extra configuration compared against the base one; repeatable")
    p.add_argument("--out", type=Path, required=True)
    _add_config(p)
    _add_common(p)

    p = sub.add_parser("simplify", help="simplify a model document against data")
    p.add_argument("model", type=Path)
    p.add_argument("csv", type=Path)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--q", type=float, default=1e-8)
    p.add_argument("--out", type=Path, required=True)
    _add_common(p)

    p = sub.add_parser("export", help="render a model document")
    p.add_argument("model", type=Path)
    p.add_argument("--format", choices=("json", "infix", "pseudocode"), default="pseudocode")
    p.add_argument("--out", type=Path, help="default stdout")
    _add_common(p)
    return parser


def resolve_config(args, task: str | None = None) -> SearchConfig:
    """Built-in profile, then the ``--config`` file, then explicit flags."""
    values = dict(PROFILES[args.profile])
    if args.config is not None:
        try:
            values.update(json.loads(args.config.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    for flag, name in _CONFIG_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[name] = value
    if args.seed is not None:
        values["seed"] = args.seed
    if task is not None:
        values["task"] = task
    return SearchConfig.from_dict(values)


def _workers(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise UsageError(f"${WORKERS_ENV} must be an integer") from None


def _metrics(task: str, y, pred) -> dict:
    if task == "classification":
        return {"auprc": auprc(y, pred), "log_loss": float(np.mean(log_loss_per_row(y, pred))),
                "balanced_accuracy": balanced_accuracy(y, (pred > 0.5).astype(float))}
    return {"r2": r2(y, pred), "mse": mse(y, pred)}


def _load(path: Path, target: str, task: str, exclude) -> Dataset:
    if not path.exists():
        raise UsageError(f"no such file: {path}")
    return load_csv(path, target, task, exclude)


def cmd_fit(args) -> dict:
    config = resolve_config(args, args.task)
    data = _load(args.csv, args.target, args.task, args.exclude)
    if args.test_csv is not None:
        train, test = data, _load(args.test_csv, args.target, args.task, args.exclude)
        if test.feature_names != train.feature_names:
            raise UsageError("test CSV columns differ from the training CSV")
    else:
        train, test = split(data, SplitSpec(0.75, stratified=args.task == "classification",
                                            seed=config.seed))
    args.out.mkdir(parents=True, exist_ok=True)
    progress = []
    start = time.perf_counter()
    result = run(config, train, progress.append if args.progress else None, _workers(args))
    log.info("search finished in %.1f s", time.perf_counter() - start)
    model = result.model
    metrics = {
        "train": _metrics(args.task, train.y, evaluate(model, train.X)),
        "test": _metrics(args.task, test.y, evaluate(model, test.X)),
        "size": model.size,
        "complexity": linear_complexity(model, config.complexity),
        "generations": result.generations,
        "validation_loss": result.validation_loss,
        "seed": config.seed,
    }
    (args.out / "model.json").write_text(dumps(model, config.complexity) + "\n", encoding="utf-8")
    (args.out / "expression.txt").write_text(to_infix(model) + "\n", encoding="utf-8")
    (args.out / "pseudocode.txt").write_text(to_pseudocode(model), encoding="utf-8")
    (args.out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n",
                                          encoding="utf-8")
    (args.out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
    if args.progress:
        (args.out / "progress.jsonl").write_text(
            "".join(json.dumps(r, sort_keys=True) + "\n" for r in progress), encoding="utf-8")
    if not args.json:
        print(to_infix(model))
        for part in ("train", "test"):
            print(part, " ".join(f"{k}={v:.6g}" for k, v in metrics[part].items()))
    return {"model": str(args.out / "model.json"), **metrics}


def _read_model(path: Path):
    try:
        return from_document(json.loads(path.read_text(encoding="utf-8")))
    except OSError as exc:
        raise UsageError(f"cannot read model {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not JSON: {exc}") from None


def _read_columns(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.exists():
        raise UsageError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path}: empty file")
    return rows[0], rows[1:]


def _feature_matrix(program, header: list[str], rows: list[list[str]]) -> np.ndarray:
    names = program.feature_names
    if names is None:
        raise UsageError("model document has no feature names")
    missing = [n for n in names if n not in header]
    if missing:
        raise UsageError(f"CSV lacks model features: {', '.join(missing)}")
    pos = [header.index(n) for n in names]

    def num(text: str) -> float:
        try:
            return float(text)
        except ValueError:
            return float("nan")

    return np.array([[num(r[i]) for i in pos] for r in rows], dtype=float).reshape(len(rows), len(pos))


def cmd_predict(args) -> dict:
    program = _read_model(args.model)
    header, rows = _read_columns(args.csv)
    X = _feature_matrix(program, header, rows)
    pred = evaluate(program, X) if len(rows) else np.empty(0)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(header + [args.column])
        for r, p in zip(rows, pred):
            w.writerow(r + [repr(float(p))])
    finally:
        if args.out:
            out.close()
    return {"rows": len(rows), "out": str(args.out) if args.out else None}


def cmd_score_gen(args) -> dict:
    table = clinical.generate_dataset(args.system, args.n, args.distractors, args.prevalence,
                                      seed=args.seed or 0)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    table.write_csv(args.out)
    info = {"system": args.system, "rows": args.n, "out": str(args.out),
            "columns": list(table.columns)}
    if "label" in table.columns:
        info["prevalence"] = float(np.mean(table.columns["label"]))
    if not args.json:
        print(f"wrote {args.n} rows to {args.out}")
    return info


def cmd_bench(args) -> dict:
    seed = args.seed or 0
    if args.generate == "clinical":
        bench.write_clinical_suite(args.suite, args.rows or 10_000, seed=seed)
    elif args.generate == "ground-truth":
        bench.write_ground_truth_suite(args.suite, args.rows or 1000, seed=seed)
    base = resolve_config(args)
    configs = {args.profile: base}
    for spec in args.variant:
        name, sep, path = spec.partition("=")
        if not sep or not name:
            raise UsageError(f"--variant expects NAME=JSON, got {spec!r}")
        try:
            extra = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read variant {path}: {exc}") from None
        configs[name] = SearchConfig.from_dict({**base.to_dict(), **extra})
    report = bench.run_suite(args.suite, configs, args.noise, args.repeats, seed, args.out,
                             _workers(args))
    if not args.json:
        print(report.summary, end="")
    return {"runs": len(report.records), "failed": sum("error" in r for r in report.records),
            "out": str(args.out)}


def cmd_simplify(args) -> dict:
    program = _read_model(args.model)
    header, rows = _read_columns(args.csv)
    X = _feature_matrix(program, header, rows)
    if X.shape[0] == 0:
        raise UsageError(f"{args.csv}: no data rows")
    index = build_index([program], sample_rows(X), args.q)
    out = simplify_program(program, index, X, tol=args.tol)
    out.feature_names = program.feature_names
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(dumps(out) + "\n", encoding="utf-8")
    info = {"size_before": program.size, "size_after": out.size, "out": str(args.out)}
    if not args.json:
        print(to_infix(out))
    return info


def cmd_export(args) -> dict:
    program = _read_model(args.model)
    if args.format == "json":
        text = json.dumps(to_document(program), indent=2) + "\n"
    elif args.format == "infix":
        text = to_infix(program) + "\n"
    else:
        text = to_pseudocode(program)
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    elif not args.json:
        sys.stdout.write(text)
    return {"format": args.format, "text": text}


COMMANDS = {"fit": cmd_fit, "predict": cmd_predict, "score-gen": cmd_score_gen,
            "bench": cmd_bench, "simplify": cmd_simplify, "export": cmd_export}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        info = COMMANDS[args.command](args)
    except (UsageError, SplitSRError) as exc:
        print(f"splitsr {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps(info, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
