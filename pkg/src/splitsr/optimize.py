"""Parameter fitting: Levenberg-Marquardt, split thresholds, and the split-aware pipeline.

Thresholds never enter the Levenberg-Marquardt step. Routing is
discontinuous in the threshold, so each split threshold is set by a
one-dimensional scan that minimises target variance on either side of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleSplitError
from .tree import (Node, Program, Slot, evaluate, evaluate_node,
                   evaluate_with_jacobian, get_params, param_slots, set_params)

MAX_DAMPING = 1e12
# Approximate scan objectives within this relative band of the best one are
# recomputed exactly before choosing.
_RECHECK_RTOL = 1e-7
_RECHECK_MAX = 32


@dataclass(frozen=True)
class LMSettings:
    max_iterations: int = 10
    damping: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 0.1
    step_tol: float = 1e-12
    loss_tol: float = 1e-15

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.damping_up > 1.0 or not 0.0 < self.damping_down < 1.0:
            raise ValueError("damping_up must be > 1 and damping_down in (0, 1)")


@dataclass
class LMResult:
    params: np.ndarray
    loss: float  # mean squared residual at ``params``
    iterations: int
    accepted: int
    failed: bool = False  # non-finite residuals at the starting point
    stalled: bool = False  # damping hit its ceiling before the budget ran out
    history: tuple[float, ...] = ()  # loss after the start and every accepted step


def levenberg_marquardt(residual, jacobian, theta0, settings: LMSettings = LMSettings()) -> LMResult:
    """Minimise ``0.5 * ||residual(theta)||**2`` with damped Gauss-Newton steps.

    Solves ``(J'J + lam * diag(J'J)) delta = -J'r``. A step is accepted only
    if it lowers the loss, so the returned point is never worse than
    ``theta0``. ``lam`` is divided by ``damping_down`` on rejection and
    multiplied by it on acceptance; every trial step costs one iteration.
    """
    theta = np.array(theta0, dtype=float)
    r = residual(theta)
    n = max(len(r), 1)
    if not np.all(np.isfinite(r)):
        return LMResult(theta, np.inf, 0, 0, failed=True)
    cost = float(r @ r)
    history = [cost / n]
    if theta.size == 0:
        return LMResult(theta, cost / n, 0, 0, history=tuple(history))

    J = jacobian(theta)
    lam = settings.damping
    accepted = 0
    stalled = False
    it = 0
    while it < settings.max_iterations:
        it += 1
        if not np.all(np.isfinite(J)):
            stalled = True
            break
        g = J.T @ r
        A = J.T @ J
        diag = np.diag(A).copy()
        diag[diag <= 0.0] = 1e-12 * max(float(diag.max()), 1.0)
        lhs = A + lam * np.diag(diag)
        try:
            delta = np.linalg.solve(lhs, -g)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(lhs, -g, rcond=None)[0]
        candidate = theta + delta
        r_new = residual(candidate)
        new_cost = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
        if new_cost < cost:
            improvement = cost - new_cost
            theta, r, cost = candidate, r_new, new_cost
            accepted += 1
            history.append(cost / n)
            lam *= settings.damping_down
            small_step = np.linalg.norm(delta) <= settings.step_tol * (np.linalg.norm(theta) + settings.step_tol)
            if small_step or improvement <= settings.loss_tol * cost:
                break
            J = jacobian(theta)
        else:
            lam *= settings.damping_up
            if lam > MAX_DAMPING:
                stalled = True
                break
    return LMResult(theta, cost / n, it, accepted, stalled=stalled, history=tuple(history))


def _trainable(program: Program, exclude: set[int] | None = None) -> list[Slot]:
    exclude = exclude or set()
    return [s for s in param_slots(program)
            if s.attr != "threshold" and (s.node is None or id(s.node) not in exclude)]


def lm_fit(program: Program, X, y, settings: LMSettings = LMSettings(),
           slots: list[Slot] | None = None) -> LMResult:
    """Fit the trainable parameters of ``program`` in place by least squares.

    ``slots`` defaults to every enabled weight, constant, and the logistic
    offset; split thresholds are never trained here. For classification the
    residual is ``p_i - y_i`` on the sigmoid output.
    """
    y = np.asarray(y, dtype=float)
    slots = _trainable(program) if slots is None else slots
    theta0 = get_params(program, slots)

    def residual(theta):
        set_params(program, theta, slots)
        return evaluate(program, X) - y

    def jacobian(theta):
        set_params(program, theta, slots)
        return evaluate_with_jacobian(program, X, slots)[1]

    result = levenberg_marquardt(residual, jacobian, theta0, settings)
    set_params(program, result.params, slots)
    return result


# ---------------------------------------------------------------------------
# split thresholds

def _objective(var_l, n_l, var_r, n_r, n, criterion):
    if criterion == "weighted":
        return (n_l / n) * var_l + (n_r / n) * var_r
    return var_l / n_l + var_r / n_r


def presort(X) -> np.ndarray:
    """Stable per-column argsort of ``X``, reusable across greedy scans on row subsets."""
    return np.argsort(np.asarray(X, dtype=float), axis=0, kind="stable")


def _near_best(cs, ys, is_edge, var_y, criterion) -> list[tuple[int, int]]:
    """(feature, edge) pairs whose approximate objective is within a tight band of the best.

    The scan uses running sums over the sorted, centred targets ``ys``; the
    caller recomputes the survivors exactly.
    """
    n = cs.shape[0]
    s1 = np.cumsum(ys, axis=0)
    s2 = np.cumsum(ys * ys, axis=0)
    n_l = np.arange(1.0, n)[:, None]
    n_r = n - n_l
    mean_l = s1[:-1] / n_l
    mean_r = (s1[-1] - s1[:-1]) / n_r
    var_l = np.maximum(s2[:-1] / n_l - mean_l ** 2, 0.0)
    var_r = np.maximum((s2[-1] - s2[:-1]) / n_r - mean_r ** 2, 0.0)
    approx = np.where(is_edge, _objective(var_l, n_l, var_r, n_r, n, criterion), np.inf)
    best = approx.min()
    band = _RECHECK_RTOL * (abs(best) + _objective(var_y, n, var_y, n, n, criterion)) + 1e-300
    ks, js = np.nonzero(approx <= best + band)
    if ks.size > _RECHECK_MAX:
        pick = np.argsort(approx[ks, js], kind="stable")[:_RECHECK_MAX]
        ks, js = ks[pick], js[pick]
    return sorted(zip(js.tolist(), ks.tolist()))  # lowest feature, then smallest threshold


def _scan(X, y, rows, order, criterion) -> tuple[int, float, float]:
    """Best (feature, threshold, objective) over the columns of ``X`` restricted to ``rows``."""
    n_full, p = X.shape
    if rows is None:
        O = order
        y_rows = y
    else:
        member = np.zeros(n_full, dtype=bool)
        member[rows] = True
        keep = member[order]
        O = order.T[keep.T].reshape(p, rows.size).T
        y_rows = y[rows]
    n = O.shape[0]
    if n < 2:
        raise InfeasibleSplitError("need at least two rows")
    cs = np.take_along_axis(X, O, axis=0)
    if not np.all(np.isfinite(cs)):
        raise InfeasibleSplitError("non-finite condition values")
    is_edge = cs[:-1] < cs[1:]
    if not is_edge.any():
        raise InfeasibleSplitError("all condition values are equal")

    if np.all(y_rows == y_rows[0]):
        # Constant targets: every split scores 0, so the first edge wins.
        j = int(np.flatnonzero(is_edge.any(axis=0))[0])
        cand = [(j, int(np.flatnonzero(is_edge[:, j])[0]))]
    else:
        cand = _near_best(cs, y[O] - y_rows.mean(), is_edge, np.var(y_rows), criterion)
    best_j, best_tau, best_obj = -1, None, np.inf
    for j, k in cand:
        lo, hi = cs[k, j], cs[k + 1, j]
        tau = lo * 0.5 + hi * 0.5  # equals (lo + hi) / 2 without overflowing
        if not lo <= tau < hi:
            tau = lo
        col = X[:, j] if rows is None else X[rows, j]
        left = col <= tau
        l, r = y_rows[left], y_rows[~left]
        obj = _objective(np.var(l), l.size, np.var(r), r.size, n, criterion)
        if obj < best_obj:
            best_j, best_tau, best_obj = j, float(tau), float(obj)
    if best_tau is None:
        raise InfeasibleSplitError("no finite split objective")
    return best_j, best_tau, best_obj


def find_split_threshold(cond, y, criterion: str = "per_count") -> tuple[float, float]:
    """Threshold on ``cond`` minimising ``Var(l)/|l| + Var(r)/|r|``.

    ``l`` holds the targets with ``cond <= tau`` and ``r`` those with
    ``cond > tau``; variances are population variances. Candidates are the
    midpoints between consecutive distinct sorted condition values; ties go
    to the smallest threshold. ``criterion="weighted"`` swaps in the
    size-weighted impurity ``|l|/d Var(l) + |r|/d Var(r)``.

    Raises
    ------
    InfeasibleSplitError
        If fewer than two distinct finite condition values exist.
    """
    c = np.asarray(cond, dtype=float)
    y = np.asarray(y, dtype=float)
    if c.shape != y.shape or c.ndim != 1:
        raise ValueError("cond and y must be 1-d arrays of equal length")
    C = c[:, None]
    _, tau, obj = _scan(C, y, None, presort(C), criterion)
    return tau, obj


def find_greedy_split(X, y, criterion: str = "per_count", rows=None,
                      order=None) -> tuple[int, float, float]:
    """Best ``(feature, threshold, objective)`` over every column of ``X``.

    Ties go to the lowest feature index, then the smallest threshold.
    ``rows`` (ascending indices) restricts the scan to a subset of rows;
    ``order`` is :func:`presort` of ``X`` and saves re-sorting when many
    subsets of the same matrix are scanned.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-d with one row per target")
    order = presort(X) if order is None else order
    rows = None if rows is None else np.asarray(rows)
    return _scan(X, y, rows, order, criterion)


# ---------------------------------------------------------------------------
# split-aware fitting

@dataclass
class FitReport:
    loss: float
    failed: bool = False
    infeasible_splits: int = 0


def _fit_subtree(root: Node, X, y, settings, exclude: set[int]) -> None:
    """Least-squares fit of the free weights inside a standalone subtree."""
    sub = Program(root)
    slots = [s for s in _trainable(sub) if id(s.node) not in exclude]
    if slots:
        lm_fit(sub, X, y, settings, slots)


def _fit_splits(node: Node, X: np.ndarray, y: np.ndarray, rows: np.ndarray, order: np.ndarray,
                settings: LMSettings, criterion: str, fixed: set[int], report: FitReport) -> None:
    """Fit the splits under ``node`` on the rows (ascending indices) that reach it."""
    if rows.size == 0:
        return
    if node.kind == "split_flexible":
        cond_root = node.children[0]
        _fit_splits(cond_root, X, y, rows, order, settings, criterion, fixed, report)
        _fit_subtree(cond_root, X[rows], y[rows], settings, fixed)
        fixed.update(id(n) for n in cond_root.walk())
        with np.errstate(all="ignore"):
            cond = evaluate_node(cond_root, X[rows])
        if rows.size >= 2:
            try:
                node.threshold, _ = find_split_threshold(cond, y[rows], criterion)
            except InfeasibleSplitError:
                # Degenerate condition: route every row to the true branch.
                report.infeasible_splits += 1
                finite = cond[np.isfinite(cond)]
                node.threshold = float(finite.min()) - 1.0 if finite.size else 0.0
        branches = node.children[1:]
    elif node.kind == "split_greedy":
        if rows.size >= 2:
            try:
                node.feature, node.threshold, _ = find_greedy_split(X, y, criterion, rows, order)
            except InfeasibleSplitError:
                report.infeasible_splits += 1
                node.threshold = float(np.min(X[rows, node.feature])) - 1.0
        cond = X[rows, node.feature]
        branches = node.children
    else:
        for child in node.children:
            _fit_splits(child, X, y, rows, order, settings, criterion, fixed, report)
        return
    mask = cond > node.threshold
    _fit_splits(branches[0], X, y, rows[mask], order, settings, criterion, fixed, report)
    _fit_splits(branches[1], X, y, rows[~mask], order, settings, criterion, fixed, report)


def fit_program(program: Program, X, y, settings: LMSettings = LMSettings(),
                criterion: str = "per_count", report: FitReport | None = None,
                order: np.ndarray | None = None) -> Program:
    """Return a copy of ``program`` with split thresholds and weights fitted.

    Splits are handled depth first: a flexible split first fits its
    condition subtree against the targets of the rows that reach it, then
    scans for its threshold, after which the condition parameters stay
    fixed. A greedy split scans every feature for the best (feature,
    threshold) pair. Finally all remaining free parameters are fitted
    jointly, each branch seeing only its routed rows. The tree structure is
    never changed. ``order`` may pass a precomputed :func:`presort` of ``X``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    out = program.copy()
    report = report if report is not None else FitReport(np.inf)
    fixed: set[int] = set()
    if any(n.kind == "split_greedy" for n in out.root.walk()):
        order = presort(X) if order is None else order
    _fit_splits(out.root, X, y, np.arange(X.shape[0]), order, settings, criterion, fixed, report)
    result = lm_fit(out, X, y, settings, _trainable(out, fixed))
    report.loss = result.loss
    report.failed = result.failed
    return out
