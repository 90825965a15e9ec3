"""Random tree creation with PTC2 (probabilistic tree creation 2).

PTC2 draws a target size, then repeatedly expands a uniformly chosen open
argument slot with a function whose arity still fits the target, and
finally closes every remaining slot with a terminal.
"""

from __future__ import annotations

import numpy as np

from .config import SearchConfig
from .errors import ConfigError
from .tree import ARITY, Node, Program


def make_terminal(rng: np.random.Generator, n_features: int,
                  allow_features: bool = True) -> Node:
    """A weighted feature or a constant; terminal weights start enabled."""
    if allow_features and n_features > 0 and rng.random() >= 1.0 / (n_features + 1):
        return Node("feature", feature=int(rng.integers(n_features)), weight=1.0,
                    weight_enabled=True)
    return Node("constant", weight=1.0)


def make_function(kind: str, rng: np.random.Generator, n_features: int) -> Node:
    node = Node(kind)
    if kind == "split_greedy":
        node.feature = int(rng.integers(max(n_features, 1)))
    if node.is_split:
        node.threshold = 0.0
    return node


def ptc2(functions, n_features: int, rng: np.random.Generator, max_depth: int,
         max_size: int, allow_features: bool = True) -> Node:
    """Grow one random tree with ``size <= max_size`` and ``depth <= max_depth``."""
    if max_depth < 1 or max_size < 1:
        raise ConfigError("max_depth and max_size must be >= 1")
    if not allow_features and not functions and n_features == 0:
        raise ConfigError("empty terminal set")
    if n_features == 0 and allow_features:
        allow_features = False
    functions = list(functions)
    target = int(rng.integers(1, max_size + 1))

    # Each open slot is (parent, child index, depth); the root slot has no parent.
    holder = Node("logistic")  # scratch parent for the root slot
    holder.children = [None]  # type: ignore[list-item]
    open_slots: list[tuple[Node, int, int]] = [(holder, 0, 1)]
    count = 0
    while open_slots and count + len(open_slots) < target:
        expandable = [i for i, s in enumerate(open_slots) if s[2] < max_depth]
        if not expandable:
            break
        room = target - (count + len(open_slots))
        fits = [f for f in functions if ARITY[f] <= room]
        if not fits:
            break
        parent, idx, depth = open_slots.pop(expandable[int(rng.integers(len(expandable)))])
        node = make_function(fits[int(rng.integers(len(fits)))], rng, n_features)
        node.children = [None] * node.arity  # type: ignore[list-item]
        parent.children[idx] = node
        count += 1
        open_slots.extend((node, i, depth + 1) for i in range(node.arity))
    for parent, idx, _ in open_slots:
        parent.children[idx] = make_terminal(rng, n_features, allow_features)
    return holder.children[0]


def generate_random(config: SearchConfig, rng: np.random.Generator, n_features: int,
                    max_depth: int | None = None, max_size: int | None = None,
                    split_seeded: bool | None = None) -> Program:
    """A random, type-valid program for ``config.task``.

    In split-seeded mode the tree is a nest of greedy splits over constant
    leaves. Classification programs get a logistic root, which counts
    towards both bounds.
    """
    max_depth = config.max_depth if max_depth is None else max_depth
    max_size = config.max_size if max_size is None else max_size
    split_seeded = config.split_seeded_init if split_seeded is None else split_seeded
    if split_seeded and "split_greedy" in config.functions:
        functions, allow_features = ("split_greedy",), False
    else:
        functions, allow_features = config.functions, True
    if not functions and n_features == 0:
        raise ConfigError("empty function and terminal sets")
    if config.task == "classification":
        if max_depth < 2 or max_size < 2:
            raise ConfigError("classification trees need depth and size >= 2")
        body = ptc2(functions, n_features, rng, max_depth - 1, max_size - 1, allow_features)
        return Program(Node("logistic", [body]), "classification")
    return Program(ptc2(functions, n_features, rng, max_depth, max_size, allow_features))
