"""Benchmark harness: problem suites, noisy repeats, per-run records and summaries.

A suite is a directory of CSV files. ``name.csv`` may come with a sidecar
``name.json`` holding ``{"target", "task", "exclude", "expression"}``;
without one the last column is the regression target.

Reports are pure functions of the run records and never contain wall
time, so repeating a suite with the same seed rewrites them byte for
byte. Timings go to a separate file.
"""

from __future__ import annotations

import csv
import json
import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import clinical
from .config import SearchConfig
from .data import Dataset, SplitSpec, add_target_noise, load_csv, split, write_csv
from .errors import InputError
from .metrics import accuracy_solution, auprc, balanced_accuracy, mse, r2
from .search import run
from .serialize import to_document, to_infix
from .tree import evaluate, linear_complexity

log = logging.getLogger(__name__)

RECORDS = "records.jsonl"
TIMINGS = "timings.jsonl"
SUMMARY = "summary.md"


@dataclass
class Problem:
    name: str
    dataset: Dataset
    expression: str | None = None


def load_problem(path) -> Problem:
    path = Path(path)
    meta: dict = {}
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
    target = meta.get("target")
    if target is None:
        with open(path, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), None)
        if not header:
            raise InputError(f"{path}: empty file")
        target = header[-1]
    dataset = load_csv(path, target, meta.get("task", "regression"), meta.get("exclude", ()))
    return Problem(path.stem, dataset, meta.get("expression"))


def load_suite(directory) -> list[Problem]:
    """Every ``*.csv`` of ``directory`` in name order."""
    paths = sorted(Path(directory).glob("*.csv"))
    if not paths:
        raise InputError(f"no CSV problems in {directory}")
    return [load_problem(p) for p in paths]


def _write_problem(directory: Path, name: str, columns: dict, meta: dict) -> None:
    write_csv(directory / f"{name}.csv", columns)
    (directory / f"{name}.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                            encoding="utf-8")


def write_clinical_suite(directory, n: int = 10_000, distractors: int = 5, seed: int = 0) -> list[str]:
    """MAP, CART and MEWS as regression targets plus CART and MEWS deterioration labels."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i, system in enumerate(("MAP", "CART", "MEWS")):
        table = clinical.generate_dataset(system, n, distractors, seed=seed + i)
        other = [c for c in ("label",) if c in table.columns]
        name = f"{system.lower()}_score"
        _write_problem(directory, name, table.columns,
                       {"target": system, "task": "regression", "exclude": other})
        names.append(name)
        if system != "MAP":
            name = f"{system.lower()}_label"
            _write_problem(directory, name, table.columns,
                           {"target": "label", "task": "classification", "exclude": [system]})
            names.append(name)
    return names


# Closed-form physics laws: (name, variable ranges, formula, infix).
GROUND_TRUTH = [
    ("kinetic_energy", {"m": (1, 5), "v": (1, 5)},
     lambda c: 0.5 * c["m"] * c["v"] ** 2, "0.5 * m * v^2"),
    ("ideal_gas_pressure", {"n": (1, 5), "T": (1, 5), "V": (1, 5)},
     lambda c: 8.314 * c["n"] * c["T"] / c["V"], "8.314 * n * T / V"),
    ("pendulum_period", {"L": (1, 5)},
     lambda c: 2 * np.pi * np.sqrt(c["L"] / 9.81), "2 * pi * sqrt(L / 9.81)"),
    ("joule_heating", {"I": (1, 5), "R": (1, 5)},
     lambda c: c["I"] ** 2 * c["R"], "I^2 * R"),
    ("gravitation", {"m1": (1, 5), "m2": (1, 5), "r": (1, 5)},
     lambda c: c["m1"] * c["m2"] / c["r"] ** 2, "m1 * m2 / r^2"),
    ("spring_energy", {"k": (1, 5), "x": (1, 5)},
     lambda c: 0.5 * c["k"] * c["x"] ** 2, "0.5 * k * x^2"),
]


def write_ground_truth_suite(directory, n: int = 1000, seed: int = 0) -> list[str]:
    """Six closed-form laws sampled uniformly over their variable ranges."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    names = []
    for name, ranges, formula, infix in GROUND_TRUTH:
        cols = {v: rng.uniform(lo, hi, n) for v, (lo, hi) in ranges.items()}
        cols["target"] = formula(cols)
        _write_problem(directory, name, cols,
                       {"target": "target", "task": "regression", "expression": infix})
        names.append(name)
    return names


def run_seed(seed: int, problem: str, config: str, noise: float, repeat: int) -> int:
    """Seed of one run, stable across processes and Python versions."""
    key = f"{problem}|{config}|{noise!r}|{repeat}".encode()
    return int(np.random.SeedSequence([seed, zlib.crc32(key)]).generate_state(1)[0])


def _evaluate_run(problem: Problem, config_name: str, config: SearchConfig, noise: float,
                  repeat: int, seed: int) -> tuple[dict, float]:
    s = run_seed(seed, problem.name, config_name, noise, repeat)
    record: dict = {"problem": problem.name, "config": config_name, "noise": noise,
                    "repeat": repeat, "seed": s, "task": problem.dataset.task}
    start = time.perf_counter()
    try:
        classify = problem.dataset.task == "classification"
        train, test = split(problem.dataset, SplitSpec(0.75, stratified=classify, seed=s))
        if noise > 0 and not classify:
            train = Dataset(train.X, add_target_noise(train.y, noise, np.random.default_rng(s)),
                            train.feature_names, train.task)
        result = run(config.replace(seed=s, task=problem.dataset.task), train)
        model = result.model
        pred = evaluate(model, test.X)
        if classify:
            record["auprc"] = auprc(test.y, pred)
            record["balanced_accuracy"] = balanced_accuracy(test.y, (pred > 0.5).astype(float))
        else:
            record["r2"] = r2(test.y, pred)
            record["mse"] = mse(test.y, pred)
        record["size"] = model.size
        record["complexity"] = linear_complexity(model, config.complexity)
        record["expression"] = to_infix(model)
        record["model"] = to_document(model, config.complexity)
    except Exception as exc:  # a failing problem must not stop the suite
        log.warning("%s/%s noise=%g repeat=%d failed: %s", problem.name, config_name, noise,
                    repeat, exc)
        record["error"] = f"{type(exc).__name__}: {exc}"
    return record, time.perf_counter() - start


def _run_task(args) -> tuple[dict, float]:
    return _evaluate_run(*args)


@dataclass
class SuiteReport:
    records: list[dict]
    seconds: list[float]
    summary: str


def run_suite(problems, configs: dict[str, SearchConfig], noise_levels=(0.0,), repeats: int = 1,
              seed: int = 0, out=None, workers: int = 1) -> SuiteReport:
    """Run every (problem, config, noise level, repeat) and aggregate the results.

    ``problems`` is a suite directory or a list of :class:`Problem`.
    Regression training targets receive the noise; test scores use the
    clean targets. Classification problems run without label noise.
    With ``out`` set, ``records.jsonl``, ``timings.jsonl`` and
    ``summary.md`` are written there.
    """
    if isinstance(problems, (str, Path)):
        problems = load_suite(problems)
    if repeats < 1:
        raise InputError("repeats must be >= 1")
    tasks = [(p, name, cfg, float(noise), r, seed)
             for p in problems for name, cfg in configs.items()
             for noise in noise_levels for r in range(repeats)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    records = [rec for rec, _ in results]
    seconds = [sec for _, sec in results]
    report = SuiteReport(records, seconds, summarize(records))
    if out is not None:
        write_report(report, out)
    return report


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True)


def write_report(report: SuiteReport, out) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / RECORDS).write_text("".join(_dump(r) + "\n" for r in report.records), encoding="utf-8")
    timings = [{"problem": r["problem"], "config": r["config"], "noise": r["noise"],
                "repeat": r["repeat"], "seconds": round(s, 3)}
               for r, s in zip(report.records, report.seconds)]
    (out / TIMINGS).write_text("".join(_dump(t) + "\n" for t in timings), encoding="utf-8")
    (out / SUMMARY).write_text(report.summary, encoding="utf-8")


def read_records(path) -> list[dict]:
    path = Path(path)
    if path.is_dir():
        path = path / RECORDS
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]


def _mean_sd(values) -> str:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return "n/a"
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return f"{float(np.mean(v)):.4f} ± {sd:.4f}"


def _score(record: dict) -> float | None:
    return record.get("auprc", record.get("r2"))


def pareto_ranks(medians: dict[str, tuple[float, float]]) -> dict[str, tuple[int, int]]:
    """Competition ranks (1 = best) of each entry on score (higher is better) and size (lower is better)."""
    scores = {k: v[0] for k, v in medians.items()}
    sizes = {k: v[1] for k, v in medians.items()}
    return {k: (1 + sum(s > scores[k] for s in scores.values()),
                1 + sum(s < sizes[k] for s in sizes.values()))
            for k in medians}


def summarize(records: list[dict]) -> str:
    """Markdown summary: per-problem mean ± SD, accuracy-solution by noise, Pareto ranks."""
    ok = [r for r in records if "error" not in r]
    failed = len(records) - len(ok)
    lines = ["# Benchmark summary", "", f"Runs: {len(records)} ({failed} failed)", ""]

    lines += ["## Per problem", "",
              "| problem | config | noise | runs | score (R² or AUPRC) | size | complexity |",
              "|---|---|---|---|---|---|---|"]
    groups: dict[tuple, list[dict]] = {}
    for r in ok:
        groups.setdefault((r["problem"], r["config"], r["noise"]), []).append(r)
    for (prob, cfg, noise), rs in sorted(groups.items()):
        lines.append(f"| {prob} | {cfg} | {noise:g} | {len(rs)} | {_mean_sd([_score(r) for r in rs])} "
                     f"| {_mean_sd([r['size'] for r in rs])} | {_mean_sd([r['complexity'] for r in rs])} |")

    reg = [r for r in ok if "r2" in r]
    if reg:
        lines += ["", "## Accuracy-solution (R² > 0.999)", "", "| config | noise | runs | rate |",
                  "|---|---|---|---|"]
        by_level: dict[tuple, list[float]] = {}
        for r in reg:
            by_level.setdefault((r["config"], r["noise"]), []).append(r["r2"])
        for (cfg, noise), values in sorted(by_level.items()):
            lines.append(f"| {cfg} | {noise:g} | {len(values)} | {accuracy_solution(values):.3f} |")

    configs = sorted({r["config"] for r in ok})
    if len(configs) > 1:
        medians = {c: (float(np.median([_score(r) for r in ok if r["config"] == c])),
                       float(np.median([r["size"] for r in ok if r["config"] == c])))
                   for c in configs}
        ranks = pareto_ranks(medians)
        lines += ["", "## Pareto ranks", "", "| config | median score | median size | score rank | size rank |",
                  "|---|---|---|---|---|"]
        for c in configs:
            m, (rs, rz) = medians[c], ranks[c]
            lines.append(f"| {c} | {m[0]:.4f} | {m[1]:g} | {rs} | {rz} |")
    return "\n".join(lines) + "\n"
