import json

import numpy as np
import pytest

from splitsr.config import SearchConfig
from splitsr.data import Dataset, SplitSpec, split, split_indices
from splitsr.metrics import r2
from splitsr.search import case_errors, run
from splitsr.serialize import dumps
from splitsr.tree import Node, Program, evaluate


def _identity_data(seed=0, n=300):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-3, 3, size=(n, 3))
    return Dataset(X, X[:, 0].copy(), ["a", "b", "c"])


def _small(**kw):
    base = dict(pop_size=20, max_gens=4, seed=3, functions=("add", "mul", "sin", "split"))
    base.update(kw)
    return SearchConfig(**base)


def test_identity_target_is_learned():
    train, test = split(_identity_data(), SplitSpec(seed=0))
    res = run(SearchConfig(pop_size=30, max_gens=10, seed=0), train)
    assert r2(test.y, evaluate(res.model, test.X)) >= 0.999


def test_same_seed_same_model_document():
    data = _identity_data(1)
    a = run(_small(), data)
    b = run(_small(), data)
    assert dumps(a.model) == dumps(b.model)
    assert a.history == b.history


def test_worker_processes_do_not_change_the_result():
    data = _identity_data(2, 200)
    serial = run(_small(max_gens=2), data)
    pooled = run(_small(max_gens=2), data, workers=2)
    assert dumps(serial.model) == dumps(pooled.model)
    assert serial.history == pooled.history


def test_population_size_and_monotone_best_loss():
    seen = []
    res = run(_small(max_gens=6), _identity_data(3), on_generation=seen.append)
    assert len(res.population) == 20
    assert [h["generation"] for h in seen] == list(range(1, 7))
    best = [h["best_loss"] for h in res.history]
    assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
    json.dumps(res.history)  # progress records serialise cleanly


def test_archive_is_rank_zero_and_holds_the_model():
    res = run(_small(simplify=False), _identity_data(4))
    assert res.archive and all(ind.rank == 0 for ind in res.archive)
    assert any(ind.program == res.model for ind in res.archive)
    assert res.raw_model == res.model


def test_final_model_has_lowest_validation_loss_in_archive():
    data = _identity_data(5)
    cfg = _small(simplify=False)
    res = run(cfg, data)
    _, val = split_indices(data.y, SplitSpec(1 - cfg.validation_fraction, seed=cfg.seed))
    losses = [case_errors(ind.program, data.X[val], data.y[val]).mean() for ind in res.archive]
    assert res.validation_loss == pytest.approx(min(losses))


def test_classification_run_returns_probabilities():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(300, 2))
    data = Dataset(X, (X[:, 0] > 0.4).astype(float), ["a", "b"], "classification")
    res = run(_small(task="classification"), data)
    assert res.model.root.kind == "logistic"
    p = evaluate(res.model, X)
    assert np.all((p >= 0) & (p <= 1))


def test_task_mismatch_rejected():
    with pytest.raises(ValueError):
        run(_small(task="classification"), _identity_data())


def test_time_limit_stops_early():
    res = run(_small(max_gens=1000, time_limit=0.0), _identity_data())
    assert res.generations == 0 and res.history == []


def test_nonfinite_programs_get_worst_case_errors():
    p = Program(Node("log", [Node("feature", feature=0)]))
    errs = case_errors(p, np.array([[-1.0], [1.0]]), np.zeros(2))
    assert np.all(errs == errs[0]) and errs[0] >= 1e300
