"""Parent selection (epsilon-lexicase) and survival (NSGA-II)."""

from __future__ import annotations

import numpy as np


def median_absolute_deviation(errors: np.ndarray) -> np.ndarray:
    """Per-case MAD of an ``(individuals, cases)`` error matrix."""
    med = np.median(errors, axis=0)
    return np.median(np.abs(errors - med), axis=0)


def epsilon_lexicase_select(errors, count: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``count`` parents chosen by epsilon-lexicase selection.

    For each pick the cases are shuffled; the candidates are filtered case by
    case, keeping those within ``epsilon`` of the best remaining candidate,
    where ``epsilon`` is the median absolute deviation of that case over the
    whole pool. Filtering stops at one candidate or when the cases run out,
    and the survivor is drawn uniformly from what remains.
    """
    errors = np.asarray(errors, dtype=float)
    n, n_cases = errors.shape
    if n == 0:
        raise ValueError("empty pool")
    eps = median_absolute_deviation(errors)
    # Individuals with identical error vectors can never be separated, so
    # filtering stops as soon as only one such group is left.
    _, group = np.unique(errors, axis=0, return_inverse=True)
    group = np.asarray(group).ravel()
    chosen = np.empty(count, dtype=int)
    everyone = np.arange(n)
    single_group = bool(np.all(group == group[0]))
    for k in range(count):
        cand = everyone
        if not single_group:
            cand = _filter(errors, eps, group, rng.permutation(n_cases))
        chosen[k] = cand[rng.integers(cand.size)]
    return chosen


def _filter(errors, eps, group, cases) -> np.ndarray:
    """Survivors of lexicase filtering along ``cases``.

    A case on which every candidate is within epsilon of the best one keeps
    all of them, so such cases are skipped a block at a time; the result is
    the same as visiting every case in order.
    """
    cand = np.arange(errors.shape[0])
    pos, block = 0, 64
    while pos < cases.size:
        span = cases[pos:pos + block]
        sub = errors[np.ix_(cand, span)]
        low = sub.min(axis=0)
        active = np.flatnonzero(sub.max(axis=0) > low + eps[span])
        if active.size == 0:
            pos += span.size
            block *= 2
            continue
        j = active[0]
        cand = cand[sub[:, j] <= low[j] + eps[span[j]]]
        pos += j + 1
        if cand.size == 1 or np.all(group[cand] == group[cand[0]]):
            break
    return cand


def dominates(a, b) -> bool:
    return bool(np.all(a <= b) and np.any(a < b))


def fast_nondominated_sort(F) -> tuple[list[np.ndarray], np.ndarray]:
    """Fronts (ascending index order inside each) and per-individual ranks, minimising."""
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    dominated_count = dom.sum(axis=0)
    rank = np.full(n, -1)
    fronts = []
    current = np.flatnonzero(dominated_count == 0)
    r = 0
    while current.size:
        rank[current] = r
        fronts.append(current)
        dominated_count = dominated_count - dom[current].sum(axis=0)
        dominated_count[rank >= 0] = -1
        current = np.flatnonzero(dominated_count == 0)
        r += 1
    return fronts, rank


def crowding_distance(F) -> np.ndarray:
    """Crowding distance within one front; boundary points get infinity."""
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        lo, hi = F[order[0], j], F[order[-1], j]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi > lo:
            dist[order[1:-1]] += (F[order[2:], j] - F[order[:-2], j]) / (hi - lo)
    return dist


def nsga2_survive(F, n_survivors: int) -> np.ndarray:
    """Indices of the ``n_survivors`` kept by non-dominated sorting plus crowding.

    Whole fronts are taken in rank order; the front that does not fit is cut
    by descending crowding distance, ties keeping input order.
    """
    F = np.asarray(F, dtype=float)
    fronts, _ = fast_nondominated_sort(F)
    survivors: list[int] = []
    for front in fronts:
        room = n_survivors - len(survivors)
        if room <= 0:
            break
        if front.size <= room:
            survivors.extend(front.tolist())
        else:
            crowd = crowding_distance(F[front])
            keep = np.argsort(-crowd, kind="stable")[:room]
            survivors.extend(front[keep].tolist())
    return np.array(survivors, dtype=int)
