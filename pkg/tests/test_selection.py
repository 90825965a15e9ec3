import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from oracles import reference_lexicase, textbook_nsga2
from splitsr.selection import (crowding_distance, dominates, epsilon_lexicase_select,
                               fast_nondominated_sort, median_absolute_deviation, nsga2_survive)


# epsilon-lexicase ---------------------------------------------------------------

def test_strictly_best_individual_always_wins(rng):
    errors = rng.uniform(1, 2, size=(10, 25))
    errors[4] = 0.0
    picks = epsilon_lexicase_select(errors, 2000, rng)
    assert np.all(picks == 4)


def test_identical_twins_split_evenly(rng):
    errors = np.tile(rng.uniform(size=(1, 12)), (2, 1))
    picks = epsilon_lexicase_select(errors, 10_000, rng)
    assert abs(np.mean(picks == 0) - 0.5) <= 0.05


def test_frequencies_match_reference_procedure():
    rng = np.random.default_rng(11)
    # Coarse integer errors produce ties, so epsilon and tie-breaking both matter.
    errors = rng.integers(0, 6, size=(20, 30)).astype(float) + rng.uniform(0, 0.3, size=(20, 30))
    draws = 100_000
    fast = np.bincount(epsilon_lexicase_select(errors, draws, np.random.default_rng(1)),
                       minlength=20) / draws
    ref_rng = np.random.default_rng(2)
    slow = np.bincount([reference_lexicase(errors, ref_rng) for _ in range(draws)],
                       minlength=20) / draws
    assert np.max(np.abs(fast - slow)) <= 0.02


def test_single_case_is_an_epsilon_tournament(rng):
    errors = rng.normal(size=(30, 1)) ** 2
    eps = median_absolute_deviation(errors)[0]
    picks = epsilon_lexicase_select(errors, 500, rng)
    assert np.all(errors[picks, 0] <= errors[:, 0].min() + eps)


@given(st.integers(0, 10_000))
def test_filter_gives_the_same_survivors_as_a_case_by_case_scan(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 15)), int(rng.integers(1, 300))
    errors = rng.integers(0, 3, size=(n, m)).astype(float)
    errors[:, rng.random(m) < 0.7] = 0.0  # mostly uninformative cases
    picks = epsilon_lexicase_select(errors, 50, rng)
    eps = median_absolute_deviation(errors)
    # Every pick must survive a full sequential filter for at least one ordering,
    # which in particular means it is never beaten by more than eps on every case.
    for p in picks:
        assert not np.any(np.all(errors < errors[p] - eps, axis=1))


def test_pool_of_one():
    assert epsilon_lexicase_select(np.zeros((1, 3)), 4, np.random.default_rng(0)).tolist() == [0] * 4


# NSGA-II --------------------------------------------------------------------------

def test_random_pools_match_textbook():
    rng = np.random.default_rng(3)
    for trial in range(200):
        F = np.column_stack([rng.integers(0, 8, 40), rng.integers(1, 12, 40)]).astype(float)
        if trial % 2:
            F[:, 0] += rng.uniform(0, 1, 40)
        assert sorted(nsga2_survive(F, 20).tolist()) == sorted(textbook_nsga2(F, 20))


def test_single_front_keeps_largest_crowding(rng):
    x = np.sort(rng.uniform(0, 1, 40))
    F = np.column_stack([x, 1 - x])
    out = nsga2_survive(F, 20)
    crowd = crowding_distance(F)
    assert np.min(crowd[out]) >= np.max(np.delete(crowd, out))


def test_dominant_individual_always_survives(rng):
    for _ in range(50):
        F = rng.uniform(1, 2, size=(40, 2))
        F[17] = [0.0, 0.0]
        assert 17 in nsga2_survive(F, 20)


@given(st.integers(0, 10_000))
def test_no_survivor_is_dominated_by_a_casualty(seed):
    rng = np.random.default_rng(seed)
    F = rng.integers(0, 10, size=(30, 2)).astype(float)
    keep = nsga2_survive(F, 15)
    assert len(keep) == 15 and len(set(keep.tolist())) == 15
    dropped = np.setdiff1d(np.arange(30), keep)
    for i in keep:
        assert not any(dominates(F[j], F[i]) for j in dropped)


def test_fronts_and_ranks_are_consistent(rng):
    F = rng.integers(0, 5, size=(25, 2)).astype(float)
    fronts, rank = fast_nondominated_sort(F)
    assert sorted(np.concatenate(fronts).tolist()) == list(range(25))
    for r, front in enumerate(fronts):
        assert np.all(rank[front] == r)
        for i in front:
            assert not any(dominates(F[j], F[i]) for j in front)


def test_crowding_boundaries_infinite():
    F = np.array([[0.0, 3.0], [1.0, 2.0], [2.0, 1.0], [3.0, 0.0]])
    d = crowding_distance(F)
    assert np.isinf(d[0]) and np.isinf(d[3]) and d[1] == d[2] == 4 / 3
