"""Mutation and crossover operators.

Every operator works on a copy and returns ``None`` when it does not apply
to the given program; :func:`vary` then retries.
"""

from __future__ import annotations

import numpy as np

from .config import MUTATIONS, SearchConfig
from .generate import make_function, make_terminal, ptc2
from .tree import ARITY, Node, Program, walk_with_parents

MAX_RETRIES = 10


def _sites(program: Program):
    """Mutable positions: every node except a logistic root."""
    return [s for s in walk_with_parents(program.root) if s[0].kind != "logistic"]


def _replace(program: Program, parent: Node | None, idx: int, new: Node) -> None:
    if parent is None:
        program.root = new
    else:
        parent.children[idx] = new


def _pick(rng: np.random.Generator, items):
    return items[int(rng.integers(len(items)))]


def toggle_on(program: Program, config: SearchConfig, rng, n_features: int):
    out = program.copy()
    nodes = [s[0] for s in _sites(out) if not s[0].weight_enabled and s[0].kind != "constant"]
    if not nodes:
        return None
    _pick(rng, nodes).weight_enabled = True
    return out


def toggle_off(program: Program, config: SearchConfig, rng, n_features: int):
    out = program.copy()
    nodes = [s[0] for s in _sites(out) if s[0].weight_enabled and s[0].kind != "constant"]
    if not nodes:
        return None
    _pick(rng, nodes).weight_enabled = False
    return out


def subtree(program: Program, config: SearchConfig, rng, n_features: int):
    out = program.copy()
    node, parent, idx, depth = _pick(rng, _sites(out))
    max_depth = config.max_depth - depth + 1
    max_size = config.max_size - (out.size - node.size())
    if max_depth < 1 or max_size < 1:
        return None
    _replace(out, parent, idx, ptc2(config.functions, n_features, rng, max_depth, max_size))
    return out


def point(program: Program, config: SearchConfig, rng, n_features: int):
    out = program.copy()
    node, parent, idx, _ = _pick(rng, _sites(out))
    if node.is_terminal:
        new = make_terminal(rng, n_features)
        if new.kind == node.kind and new.feature == node.feature:
            return None  # same feature, or constant for constant
        if new.kind == "feature" and node.kind == "feature":
            new.weight = node.weight
            new.weight_enabled = node.weight_enabled
    else:
        options = [f for f in config.functions if ARITY[f] == node.arity and f != node.kind]
        if not options:
            return None
        new = make_function(_pick(rng, options), rng, n_features)
        new.children = node.children
        new.weight, new.weight_enabled = node.weight, node.weight_enabled
        if new.is_split and node.threshold is not None:
            new.threshold = node.threshold
    _replace(out, parent, idx, new)
    return out


def delete(program: Program, config: SearchConfig, rng, n_features: int):
    """Remove one operator, promoting a random one of its children into its place."""
    out = program.copy()
    sites = [s for s in _sites(out) if s[0].children]
    if not sites:
        return None
    node, parent, idx, _ = _pick(rng, sites)
    _replace(out, parent, idx, _pick(rng, node.children))
    return out


def insert(program: Program, config: SearchConfig, rng, n_features: int):
    """Wrap a random subtree as one argument of a new operator; other arguments are terminals."""
    out = program.copy()
    options = [f for f in config.functions if ARITY[f] >= 1]
    if not options:
        return None
    node, parent, idx, _ = _pick(rng, _sites(out))
    new = make_function(_pick(rng, options), rng, n_features)
    slot = int(rng.integers(new.arity))
    new.children = [node if i == slot else make_terminal(rng, n_features)
                    for i in range(new.arity)]
    _replace(out, parent, idx, new)
    return out


def crossover(a: Program, b: Program, config: SearchConfig, rng, n_features: int):
    """Copy of ``a`` with one random subtree swapped for a random subtree of ``b``."""
    out = a.copy()
    _, parent, idx, _ = _pick(rng, _sites(out))
    donor = _pick(rng, _sites(b))[0].copy()
    _replace(out, parent, idx, donor)
    return out


OPERATORS = {
    "toggle_on": toggle_on,
    "toggle_off": toggle_off,
    "subtree": subtree,
    "point": point,
    "delete": delete,
    "insert": insert,
}


def within_bounds(program: Program, config: SearchConfig) -> bool:
    return program.size <= config.max_size and program.depth <= config.max_depth


def vary(parent: Program, other: Program | None, config: SearchConfig,
         rng: np.random.Generator, n_features: int) -> tuple[Program, str]:
    """One offspring and the name of the operator that produced it.

    Offspring that break the size or depth bounds are discarded and the
    variation redrawn; after ``MAX_RETRIES`` failures the parent is cloned.
    """
    names = [m for m in MUTATIONS if config.mutation_weights.get(m, 0.0) > 0]
    probs = np.array([config.mutation_weights[m] for m in names], dtype=float)
    probs /= probs.sum()
    for _ in range(MAX_RETRIES):
        if other is not None and rng.random() < config.crossover_prob:
            child, op = crossover(parent, other, config, rng, n_features), "crossover"
        else:
            op = names[int(rng.choice(len(names), p=probs))]
            child = OPERATORS[op](parent, config, rng, n_features)
        if child is not None and within_bounds(child, config):
            return child, op
    return parent.copy(), "clone"
