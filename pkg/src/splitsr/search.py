"""The generational loop: fit, select, vary, survive, pick the final model."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import SearchConfig
from .data import Dataset, SplitSpec, split_indices
from .generate import generate_random
from .metrics import log_loss_per_row
from .optimize import FitReport, LMSettings, fit_program, presort
from .selection import epsilon_lexicase_select, fast_nondominated_sort, crowding_distance, nsga2_survive
from .simplify import build_index, sample_rows, simplify_program
from .tree import Program, evaluate, linear_complexity
from .variation import vary

log = logging.getLogger(__name__)

WORST_LOSS = 1e300


@dataclass
class Individual:
    program: Program
    loss: float
    complexity: int
    case_errors: np.ndarray = field(repr=False)
    rank: int = 0
    crowding: float = 0.0
    origin: str = "init"

    def objectives(self, names) -> list[float]:
        values = {"loss": self.loss, "complexity": float(self.complexity),
                  "size": float(self.program.size)}
        return [values[n] for n in names]


@dataclass
class SearchResult:
    model: Program
    archive: list[Individual]
    population: list[Individual]
    history: list[dict]
    raw_model: Program  # final model before simplification
    validation_loss: float
    generations: int


def case_errors(program: Program, X, y) -> np.ndarray:
    """Per-row squared error (regression) or log-loss (classification)."""
    pred = evaluate(program, X)
    if not np.all(np.isfinite(pred)):
        return np.full(len(y), WORST_LOSS)
    if program.task == "classification":
        return log_loss_per_row(y, pred)
    err = (pred - y) ** 2
    if not np.all(np.isfinite(err)):
        return np.full(len(y), WORST_LOSS)
    return err


def make_individual(program: Program, X, y, config: SearchConfig, settings: LMSettings,
                    origin: str = "init", order: np.ndarray | None = None) -> Individual:
    fitted = fit_program(program, X, y, settings, config.split_criterion, FitReport(np.inf), order)
    fitted.feature_names = program.feature_names
    errors = case_errors(fitted, X, y)
    loss = float(errors.mean())
    if not np.isfinite(loss):
        loss = WORST_LOSS
    return Individual(fitted, loss, linear_complexity(fitted, config.complexity), errors,
                      origin=origin)


def _rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream per (generation, slot) so batch order never matters."""
    return np.random.default_rng([seed, *keys])


class _Fitter:
    """Fits batches of programs, in worker processes when ``workers > 1``.

    Results come back in submission order, so the worker count never
    changes the outcome.
    """

    def __init__(self, X, y, config: SearchConfig, settings: LMSettings, workers: int):
        self.args = (X, y, config, settings, presort(X))
        self.pool = None
        self.workers = workers
        if workers > 1:
            self.pool = ProcessPoolExecutor(workers, initializer=_worker_init, initargs=self.args)

    def fit(self, programs: list[Program], origins: list[str]) -> list[Individual]:
        if self.pool is None:
            X, y, config, settings, order = self.args
            return [make_individual(p, X, y, config, settings, o, order)
                    for p, o in zip(programs, origins)]
        chunk = max(1, len(programs) // (4 * self.workers))
        return list(self.pool.map(_worker_fit, programs, origins, chunksize=chunk))

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown()


_WORKER_ARGS: tuple | None = None


def _worker_init(*args) -> None:
    global _WORKER_ARGS
    _WORKER_ARGS = args


def _worker_fit(program: Program, origin: str) -> Individual:
    X, y, config, settings, order = _WORKER_ARGS
    return make_individual(program, X, y, config, settings, origin, order)


def _rank(pop: list[Individual], names) -> None:
    F = np.array([ind.objectives(names) for ind in pop])
    fronts, ranks = fast_nondominated_sort(F)
    for front in fronts:
        crowd = crowding_distance(F[front])
        for i, c in zip(front, crowd):
            pop[i].crowding = float(c)
    for ind, r in zip(pop, ranks):
        ind.rank = int(r)


def _evolve(config: SearchConfig, fitter: _Fitter, n_features: int, names: list[str],
            start: float, on_generation) -> tuple[list[Individual], list[dict], int]:
    programs = []
    for k in range(config.pop_size):
        program = generate_random(config, _rng(config.seed, 0, k + 1), n_features)
        program.feature_names = names
        programs.append(program)
    pop = fitter.fit(programs, ["init"] * config.pop_size)
    _rank(pop, config.objectives)

    history: list[dict] = []
    gen = 0
    for gen in range(1, config.max_gens + 1):
        if config.time_limit is not None and time.perf_counter() - start > config.time_limit:
            gen -= 1
            break
        errors = np.stack([ind.case_errors for ind in pop])
        parents = epsilon_lexicase_select(errors, config.pop_size, _rng(config.seed, gen, 0))
        children, ops = [], []
        for k in range(config.pop_size):
            rng = _rng(config.seed, gen, k + 1)
            mate = pop[parents[(k + 1) % config.pop_size]].program
            child, op = vary(pop[parents[k]].program, mate, config, rng, n_features)
            child.feature_names = names
            children.append(child)
            ops.append(op)
        pool = pop + fitter.fit(children, ops)
        F = np.array([ind.objectives(config.objectives) for ind in pool])
        keep = nsga2_survive(F, config.pop_size)
        pop = [pool[i] for i in keep]
        _rank(pop, config.objectives)
        losses = np.array([ind.loss for ind in pop])
        record = {"generation": gen, "best_loss": float(losses.min()),
                  "median_loss": float(np.median(losses)),
                  "front_size": int(sum(ind.rank == 0 for ind in pop))}
        history.append(record)
        if on_generation is not None:
            on_generation(record)
        log.debug("gen %d best %.6g median %.6g front %d", gen, record["best_loss"],
                  record["median_loss"], record["front_size"])
    return pop, history, gen


def run(config: SearchConfig, dataset: Dataset,
        on_generation: Callable[[dict], None] | None = None, workers: int = 1) -> SearchResult:
    """Evolve a population on ``dataset`` and return the selected model.

    A share of the rows (``validation_fraction``) is held out; the final
    model is the rank-0 individual with the lowest loss on it, ties going
    to the lower complexity. ``workers > 1`` fits each batch of programs
    in that many processes; results are identical to a serial run.
    """
    if dataset.task != config.task:
        raise ValueError(f"dataset task {dataset.task!r} != config task {config.task!r}")
    start = time.perf_counter()
    settings = LMSettings(max_iterations=config.lm_iterations)
    X, y = dataset.X, dataset.y
    n_features = X.shape[1]
    names = list(dataset.feature_names)

    if config.validation_fraction > 0:
        spec = SplitSpec(1.0 - config.validation_fraction,
                         stratified=config.task == "classification", seed=config.seed)
        fit_idx, val_idx = split_indices(y, spec, config.task)
    else:
        fit_idx = val_idx = np.arange(len(y))
    X_fit, y_fit = X[fit_idx], y[fit_idx]
    X_val, y_val = X[val_idx], y[val_idx]
    fitter = _Fitter(X_fit, y_fit, config, settings, workers)
    try:
        pop, history, gen = _evolve(config, fitter, n_features, names, start, on_generation)
    finally:
        fitter.close()

    archive = [ind for ind in pop if ind.rank == 0]
    val = [float(case_errors(ind.program, X_val, y_val).mean()) for ind in archive]
    best = min(range(len(archive)), key=lambda i: (val[i], archive[i].complexity, i))
    raw = archive[best].program
    model = raw
    if config.simplify:
        index = build_index([ind.program for ind in pop], sample_rows(X_fit),
                            config.simplify_q, config.complexity)
        model = simplify_program(raw, index, X_fit, y_fit, config.simplify_tol)
        model.feature_names = names
    return SearchResult(model, archive, pop, history, raw, val[best], gen)
