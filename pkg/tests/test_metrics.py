import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_average_precision
from splitsr.metrics import accuracy_solution, auprc, balanced_accuracy, log_loss_per_row, mse, r2


def test_perfect_prediction():
    y = np.array([1.0, 2.0, 5.0])
    assert r2(y, y) == 1.0 and mse(y, y) == 0.0


def test_constant_target_convention():
    assert r2([2, 2, 2], [2, 2, 2]) == 1.0
    assert r2([2, 2, 2], [2, 2, 3]) == 0.0


def test_r2_value_and_nonfinite():
    assert r2([1, 2, 3], [1, 2, 4]) == pytest.approx(0.5)
    assert r2([1, 2, 3], [1, np.nan, 3]) == -np.inf


def test_length_mismatch():
    with pytest.raises(ValueError):
        mse([1, 2], [1])


@given(st.integers(0, 10_000))
def test_r2_invariant_to_joint_permutation(seed):
    rng = np.random.default_rng(seed)
    y, yhat = rng.normal(size=30), rng.normal(size=30)
    perm = rng.permutation(30)
    assert r2(y[perm], yhat[perm]) == pytest.approx(r2(y, yhat), rel=1e-12)


def test_auprc_perfect_ranking():
    assert auprc([0, 1, 0, 1], [0.1, 0.9, 0.2, 0.8]) == 1.0


def test_auprc_constant_scorer_gives_prevalence():
    y = np.array([0, 0, 1, 0, 1, 0, 0, 0, 0, 0.0])
    assert auprc(y, np.full(10, 0.3)) == pytest.approx(0.2)


def test_auprc_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        y = (rng.random(100) < rng.uniform(0.05, 0.6)).astype(float)
        if y.sum() == 0:
            continue
        # coarse scores produce ties
        p = np.round(rng.random(100), int(rng.integers(1, 4)))
        assert auprc(y, p) == pytest.approx(brute_average_precision(y, p), abs=1e-12)


def test_auprc_no_positives():
    assert auprc([0, 0], [0.2, 0.4]) == 0.0


def test_balanced_accuracy():
    y = np.array([0, 0, 0, 1.0])
    assert balanced_accuracy(y, [0, 0, 1, 1]) == pytest.approx((2 / 3 + 1) / 2)


def test_accuracy_solution():
    assert accuracy_solution([0.9999, 0.999, 1.0, 0.5]) == 0.5
    assert accuracy_solution([]) == 0.0
    assert accuracy_solution([0.95], threshold=0.9) == 1.0


def test_log_loss_is_clipped():
    out = log_loss_per_row([1.0, 0.0], [0.0, 1.0])
    assert np.all(np.isfinite(out)) and out[0] == pytest.approx(-np.log(1e-15))
