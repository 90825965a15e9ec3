"""Inexact simplification by prediction-vector matching.

Every subtree of a population is evaluated on a small row sample; the
quantised prediction vector is the lookup key, and the least complex
subtree seen for each key is kept. A program is then rewritten bottom-up:
a subtree is swapped for a strictly simpler indexed one, or reduced by a
few local rules, whenever the whole-program predictions on the training
rows move by at most ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import (DEFAULT_COMPLEXITY, Node, Program, evaluate, evaluate_node,
                   node_complexity, walk_with_parents)

SAMPLE_ROWS = 64


def sample_rows(X, n: int = SAMPLE_ROWS) -> np.ndarray:
    """Evenly spaced rows of ``X`` used for keying."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] <= n:
        return X.copy()
    return X[np.linspace(0, X.shape[0] - 1, n).astype(int)]


def prediction_key(pred: np.ndarray, q: float) -> bytes | None:
    if not np.all(np.isfinite(pred)):
        return None
    # "+ 0.0" folds -0.0 into 0.0 so both hash alike.
    return (np.round(pred / q) + 0.0).tobytes()


@dataclass
class PredictionIndex:
    q: float
    X_sample: np.ndarray
    table: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_COMPLEXITY))
    entries: dict[bytes, tuple[Node, int]] = field(default_factory=dict)

    def key(self, node: Node) -> bytes | None:
        with np.errstate(all="ignore"):
            pred = evaluate_node(node, self.X_sample)
        return prediction_key(np.asarray(pred, dtype=float), self.q)

    def add(self, node: Node) -> None:
        if node.kind == "logistic":
            return
        k = self.key(node)
        if k is None:
            return
        c = node_complexity(node, self.table)
        held = self.entries.get(k)
        if held is None or c < held[1] or (c == held[1] and node.size() < held[0].size()):
            self.entries[k] = (node.copy(), c)

    def lookup(self, node: Node) -> tuple[Node, int] | None:
        k = self.key(node)
        return None if k is None else self.entries.get(k)

    def __len__(self) -> int:
        return len(self.entries)


def build_index(population, X_sample, q: float = 1e-8, table=None) -> PredictionIndex:
    """Index every subtree of every program in ``population``."""
    if q <= 0:
        raise ValueError("q must be positive")
    X_sample = np.asarray(X_sample, dtype=float)
    if X_sample.ndim != 2 or X_sample.shape[0] == 0:
        raise ValueError("X_sample must be a non-empty 2-d array")
    index = PredictionIndex(q, X_sample, dict(table or DEFAULT_COMPLEXITY))
    for program in population:
        for node in program.root.walk():
            index.add(node)
    return index


def _absorb_weight(node: Node, w: float) -> Node:
    """``node`` scaled by ``w`` without adding a node."""
    out = node.copy()
    if w == 1.0:
        return out
    if out.weight_enabled:
        out.weight *= w
    elif out.kind != "logistic":
        out.weight, out.weight_enabled = w, True
    return out


def _local_rewrites(node: Node, q: float):
    """Candidate replacements for ``node`` from the deterministic rules."""
    w = node.effective_weight
    if node.is_split:
        branches = node.children if node.kind == "split_greedy" else node.children[1:]
        # identical branches, or every training row taking one side, make
        # the split a pass-through; the drift check tells which applies
        yield _absorb_weight(branches[0], w)
        if branches[1] != branches[0]:
            yield _absorb_weight(branches[1], w)
    if node.kind in ("add", "sub"):
        a, b = node.children
        if b.kind == "constant" and abs(b.weight) <= q:
            yield _absorb_weight(a, w)
        if node.kind == "add" and a.kind == "constant" and abs(a.weight) <= q:
            yield _absorb_weight(b, w)
    if node.weight_enabled and node.kind != "constant" and abs(node.weight - 1.0) <= q:
        out = node.copy()
        out.weight_enabled = False
        yield out


def _swap(program: Program, path: list[int], new: Node) -> Program:
    out = program.copy()
    if not path:
        out.root = new
        return out
    node = out.root
    for i in path[:-1]:
        node = node.children[i]
    node.children[path[-1]] = new
    return out


def _paths(root: Node) -> list[list[int]]:
    """Child-index paths of every node, children before parents."""
    out: list[list[int]] = []

    def rec(node: Node, path: list[int]) -> None:
        for i, c in enumerate(node.children):
            rec(c, path + [i])
        out.append(path)

    rec(root, [])
    return out


@dataclass
class SimplifyReport:
    substitutions: int = 0
    max_step_drift: float = 0.0


def simplify_program(program: Program, index: PredictionIndex | None, X_train, y=None,
                     tol: float = 1e-6, q: float | None = None,
                     report: SimplifyReport | None = None) -> Program:
    """Simplified copy of ``program``.

    Each accepted rewrite keeps the linear complexity from growing and moves
    training predictions by at most ``tol``; rewrites repeat until none
    applies, so the result is a fixed point for the same index.
    """
    X = np.asarray(X_train, dtype=float)
    q = index.q if (q is None and index is not None) else (1e-8 if q is None else q)
    table = index.table if index is not None else DEFAULT_COMPLEXITY
    report = report if report is not None else SimplifyReport()
    current = program.copy()
    current_pred = evaluate(current, X)

    def node_at(root: Node, path: list[int]) -> Node:
        for i in path:
            root = root.children[i]
        return root

    changed = True
    while changed:
        changed = False
        for path in _paths(current.root):
            node = node_at(current.root, path)
            if node.kind == "logistic":
                continue
            cost = node_complexity(node, table)
            candidates = list(_local_rewrites(node, q))
            if index is not None:
                hit = index.lookup(node)
                if hit is not None and hit[1] < cost:
                    candidates.append(hit[0].copy())
            for cand in candidates:
                if cand == node:
                    continue
                if node_complexity(cand, table) > cost:
                    continue
                trial = _swap(current, path, cand)
                pred = evaluate(trial, X)
                if not np.all(np.isfinite(pred)):
                    continue
                drift = float(np.max(np.abs(pred - current_pred)))
                if drift <= tol:
                    current, current_pred = trial, pred
                    report.substitutions += 1
                    report.max_step_drift = max(report.max_step_drift, drift)
                    changed = True
                    break
            if changed:
                break
    return current
