"""Evaluation metrics."""

from __future__ import annotations

import numpy as np

_EPS = 1e-15


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {yhat.shape}")
    return y, yhat


def mse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean((yhat - y) ** 2))


def r2(y, yhat) -> float:
    """Coefficient of determination; a constant target scores 1 if matched exactly, else 0."""
    y, yhat = _pair(y, yhat)
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if not np.isfinite(ss_res):
        return -np.inf
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def log_loss_per_row(y, p) -> np.ndarray:
    y, p = _pair(y, p)
    p = np.clip(p, _EPS, 1.0 - _EPS)
    return -(y * np.log(p) + (1.0 - y) * np.log1p(-p))


def auprc(y, scores) -> float:
    """Average precision: sum over distinct descending thresholds of precision * recall gain."""
    y, s = _pair(y, scores)
    positives = y.sum()
    if positives == 0:
        return 0.0
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    # last index of each run of tied scores
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.cumsum(y)[ends]
    predicted = ends + 1.0
    precision = tp / predicted
    recall = tp / positives
    gain = np.diff(np.r_[0.0, recall])
    return float(np.sum(gain * precision))


def balanced_accuracy(y, labels) -> float:
    y, labels = _pair(y, labels)
    recalls = [np.mean(labels[y == c] == c) for c in np.unique(y)]
    return float(np.mean(recalls))


def accuracy_solution(r2_values, threshold: float = 0.999) -> float:
    """Fraction of runs whose R^2 is strictly above ``threshold``."""
    values = np.asarray(r2_values, dtype=float)
    if values.size == 0:
        return 0.0
    return float(np.mean(values > threshold))
