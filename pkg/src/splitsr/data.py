"""Datasets: CSV ingestion, train/test splitting and target noise."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

log = logging.getLogger(__name__)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    task: str = "regression"
    dropped_rows: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.shape[0]:
            raise InputError("X must be d x n and y of length d")
        if len(self.feature_names) != self.X.shape[1]:
            raise InputError("one feature name per column is required")
        if self.task not in ("regression", "classification"):
            raise InputError(f"unknown task {self.task!r}")
        if self.task == "classification" and not np.all(np.isin(self.y, (0.0, 1.0))):
            raise InputError("classification targets must be 0 or 1")

    def __len__(self) -> int:
        return self.y.shape[0]

    def subset(self, idx) -> Dataset:
        return Dataset(self.X[idx], self.y[idx], list(self.feature_names), self.task,
                       meta=dict(self.meta))

    @property
    def prevalence(self) -> float | None:
        if self.task != "classification":
            return None
        return float(self.y.mean())


def load_csv(path, target: str, task: str = "regression", exclude=()) -> Dataset:
    """Read a headed CSV; every column except ``target`` and ``exclude`` is a feature.

    Rows with missing or non-finite values are dropped and counted.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    header = [h.strip() for h in header]
    if target not in header:
        raise InputError(f"target column {target!r} not found in {path}")
    missing = [c for c in exclude if c not in header]
    if missing:
        raise InputError(f"excluded columns not found: {missing}")
    if not rows:
        raise InputError(f"{path}: no data rows")
    t = header.index(target)
    keep = [i for i, h in enumerate(header) if h != target and h not in exclude]

    def num(v: str) -> float:
        v = v.strip()
        if v == "" or v.lower() in ("na", "nan", "null"):
            return np.nan
        return float(v)

    values = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise InputError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        for j, v in enumerate(row):
            try:
                values[i, j] = num(v)
            except ValueError:
                if j == t:
                    raise InputError(f"non-numeric target value {v!r} on row {i + 2}") from None
                raise InputError(f"non-numeric value {v!r} in column {header[j]!r}, row {i + 2}") from None
    used = values[:, keep + [t]]
    ok = np.all(np.isfinite(used), axis=1)
    dropped = int((~ok).sum())
    if dropped:
        log.warning("%s: dropped %d row(s) with missing values", path, dropped)
    if ok.sum() < 2:
        raise InputError(f"{path}: fewer than two complete rows")
    data = Dataset(used[ok, :-1], used[ok, -1], [header[i] for i in keep], task,
                   dropped_rows=dropped)
    return data


def write_csv(path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*arrays):
            w.writerow([_cell(v) for v in row])


def _cell(v) -> str:
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    f = float(v)
    if f.is_integer() and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    stratified: bool = False
    folds: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise InputError("train_fraction must lie in (0, 1)")
        if self.folds is not None and self.folds < 2:
            raise InputError("folds must be >= 2")


def _stratified_order(y: np.ndarray, rng: np.random.Generator) -> list[np.ndarray]:
    classes = np.unique(y)
    groups = []
    for c in classes:
        idx = np.flatnonzero(y == c)
        if idx.size < 2:
            raise InputError(f"class {c:g} has fewer than two members")
        groups.append(rng.permutation(idx))
    return groups


def split_indices(y, spec: SplitSpec, task: str = "regression") -> tuple[np.ndarray, np.ndarray]:
    """Train and test row indices, sorted, deterministic in ``spec.seed``."""
    y = np.asarray(y)
    if spec.stratified and task != "classification":
        raise InputError("stratified splits need a classification task")
    d = y.shape[0]
    rng = np.random.default_rng(spec.seed)
    if not spec.stratified:
        perm = rng.permutation(d)
        n_train = int(round(spec.train_fraction * d))
        n_train = min(max(n_train, 1), d - 1)
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])
    groups = _stratified_order(y, rng)
    n_test = d - min(max(int(round(spec.train_fraction * d)), 1), d - 1)
    # Largest-remainder allocation keeps every class within one row of its share.
    share = np.array([g.size * n_test / d for g in groups])
    take = np.floor(share).astype(int)
    for i in np.argsort(-(share - take), kind="stable")[: n_test - take.sum()]:
        take[i] += 1
    take = np.clip(take, 1, [g.size - 1 for g in groups])
    train = [g[t:] for g, t in zip(groups, take)]
    test = [g[:t] for g, t in zip(groups, take)]
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def split(dataset: Dataset, spec: SplitSpec):
    """``(train, test)`` datasets, or a list of ``k`` such pairs when ``spec.folds`` is set."""
    if spec.folds is None:
        tr, te = split_indices(dataset.y, spec, dataset.task)
        return dataset.subset(tr), dataset.subset(te)
    return [(dataset.subset(tr), dataset.subset(te)) for tr, te in kfold_indices(dataset, spec)]


def kfold_indices(dataset: Dataset, spec: SplitSpec) -> list[tuple[np.ndarray, np.ndarray]]:
    rng = np.random.default_rng(spec.seed)
    k = spec.folds
    if spec.stratified:
        groups = _stratified_order(dataset.y, rng)
    else:
        groups = [rng.permutation(len(dataset))]
    fold_of = np.empty(len(dataset), dtype=int)
    for idx in groups:
        fold_of[idx] = np.arange(idx.size) % k
    all_idx = np.arange(len(dataset))
    return [(all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(k)]


def add_target_noise(y, level: float, rng: np.random.Generator) -> np.ndarray:
    """``y + N(0, (level * RMS(y))**2)``; ``level == 0`` returns an unchanged copy."""
    y = np.asarray(y, dtype=float)
    if level < 0:
        raise InputError("noise level must be >= 0")
    if level == 0:
        return y.copy()
    rms = float(np.sqrt(np.mean(y * y)))
    return y + rng.normal(0.0, level * rms, size=y.shape)
