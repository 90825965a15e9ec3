import json

import numpy as np
import pytest

from splitsr import bench
from splitsr.bench import (load_problem, load_suite, pareto_ranks, read_records, run_suite,
                           summarize, write_clinical_suite, write_ground_truth_suite)
from splitsr.config import SearchConfig
from splitsr.data import write_csv
from splitsr.errors import InputError

TINY = SearchConfig(pop_size=10, max_gens=2, functions=("add", "mul", "split"))
PLAIN = SearchConfig(pop_size=20, max_gens=5, functions=("add", "mul"), split_seeded_init=False)


def _identity_suite(tmp_path):
    tmp_path.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    x = rng.uniform(-2, 2, 120)
    write_csv(tmp_path / "ident.csv", {"x": x, "z": rng.normal(size=120), "y": x})
    return tmp_path


def test_identity_problem_is_always_solved(tmp_path):
    report = run_suite(_identity_suite(tmp_path), {"plain": PLAIN}, repeats=3, seed=1)
    assert len(report.records) == 3
    assert all(r["r2"] > 0.999 for r in report.records)
    assert "| plain | 0 | 3 | 1.000 |" in report.summary


def test_last_column_is_the_default_target(tmp_path):
    p = load_problem(_identity_suite(tmp_path) / "ident.csv")
    assert p.dataset.feature_names == ["x", "z"] and p.expression is None


def test_clinical_suite_has_five_tasks(tmp_path):
    names = write_clinical_suite(tmp_path, n=400, distractors=1, seed=0)
    assert names == ["map_score", "cart_score", "cart_label", "mews_score", "mews_label"]
    problems = load_suite(tmp_path)
    tasks = {p.name: p.dataset.task for p in problems}
    assert tasks["cart_label"] == tasks["mews_label"] == "classification"
    assert "label" not in next(p for p in problems if p.name == "cart_score").dataset.feature_names
    report = run_suite(problems, {"tiny": TINY}, seed=0)
    assert not any("error" in r for r in report.records)
    rows = [line for line in report.summary.splitlines() if line.startswith("| ") and "±" in line]
    assert len(rows) == 5
    assert all("auprc" in r for r in report.records if r["problem"].endswith("label"))


def test_ground_truth_suite_matches_its_formulas(tmp_path):
    names = write_ground_truth_suite(tmp_path, n=50, seed=3)
    assert len(names) == 6
    p = load_problem(tmp_path / "kinetic_energy.csv")
    m, v = p.dataset.X.T
    assert np.allclose(p.dataset.y, 0.5 * m * v ** 2)
    assert p.expression == "0.5 * m * v^2"


def test_noise_reaches_training_targets_only(tmp_path, monkeypatch):
    seen = []
    real_run = bench.run

    def spy(config, dataset, *a, **k):
        seen.append(dataset.y.copy())
        return real_run(config, dataset, *a, **k)

    monkeypatch.setattr(bench, "run", spy)
    problem = load_problem(_identity_suite(tmp_path) / "ident.csv")
    report = run_suite([problem], {"plain": PLAIN}, noise_levels=(0.0, 0.5), seed=2)
    clean_run, noisy_run = seen
    assert not np.array_equal(clean_run, noisy_run)
    # Test scoring uses clean targets, so an exact identity model still scores 1.
    noisy = next(r for r in report.records if r["noise"] == 0.5)
    clean = next(r for r in report.records if r["noise"] == 0.0)
    assert clean["r2"] > 0.999 and noisy["r2"] <= 1.0


def test_failures_are_recorded_and_the_suite_continues(tmp_path, monkeypatch):
    calls = []

    def flaky(config, dataset, *a, **k):
        calls.append(1)
        if len(calls) == 1:
            raise RuntimeError("boom")
        return real_run(config, dataset, *a, **k)

    real_run = bench.run
    monkeypatch.setattr(bench, "run", flaky)
    report = run_suite(_identity_suite(tmp_path), {"tiny": TINY}, repeats=2)
    assert report.records[0]["error"] == "RuntimeError: boom"
    assert "r2" in report.records[1]
    assert "Runs: 2 (1 failed)" in report.summary


def test_reports_regenerate_bit_identically(tmp_path):
    suite = _identity_suite(tmp_path / "suite")
    a, b = tmp_path / "a", tmp_path / "b"
    run_suite(suite, {"tiny": TINY}, repeats=2, seed=4, out=a)
    run_suite(suite, {"tiny": TINY}, repeats=2, seed=4, out=b)
    for name in ("records.jsonl", "summary.md"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert summarize(read_records(a)) == (a / "summary.md").read_text()
    timings = [json.loads(line) for line in (a / "timings.jsonl").read_text().splitlines()]
    assert len(timings) == 2 and all(t["seconds"] >= 0 for t in timings)


def test_pareto_ranks_oracle():
    ranks = pareto_ranks({"good": (0.99, 5.0), "bad": (0.90, 20.0), "mid": (0.95, 20.0)})
    assert ranks["good"] == (1, 1)
    assert ranks["mid"] == (2, 2) and ranks["bad"] == (3, 2)


def test_two_configs_produce_a_pareto_table(tmp_path):
    configs = {"a": TINY, "b": TINY.replace(max_size=3)}
    report = run_suite(_identity_suite(tmp_path), configs, seed=0)
    assert "## Pareto ranks" in report.summary


def test_run_seeds_are_distinct_and_stable():
    a = bench.run_seed(0, "p", "c", 0.0, 0)
    assert a == bench.run_seed(0, "p", "c", 0.0, 0)
    assert len({a, bench.run_seed(0, "p", "c", 0.0, 1), bench.run_seed(0, "p", "c", 0.1, 0),
                bench.run_seed(1, "p", "c", 0.0, 0)}) == 4


def test_bad_suite_inputs(tmp_path):
    with pytest.raises(InputError):
        load_suite(tmp_path)
    with pytest.raises(InputError):
        run_suite(_identity_suite(tmp_path), {"tiny": TINY}, repeats=0)
