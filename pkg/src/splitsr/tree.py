"""Expression trees with innate node weights and data-masking split nodes.

A tree is built from :class:`Node` objects. Every node carries a
multiplicative weight that is either part of the trainable parameter
vector (``weight_enabled``) or behaves as exactly 1. Split nodes route each
row to one of two branches; a branch only ever sees the rows routed to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .errors import InputError, StructureError

UNARY: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
}
ROUNDING: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "ceil": np.ceil,
    "floor": np.floor,
}
BINARY: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
    "pow": np.power,
    "min": np.minimum,
    "max": np.maximum,
}
TERMINALS = ("constant", "feature")
SPLITS = ("split_greedy", "split_flexible")

ARITY: dict[str, int] = {"constant": 0, "feature": 0, "logistic": 1,
                         "split_greedy": 2, "split_flexible": 3}
ARITY.update({k: 1 for k in UNARY})
ARITY.update({k: 1 for k in ROUNDING})
ARITY.update({k: 2 for k in BINARY})

KINDS = tuple(ARITY)

DEFAULT_COMPLEXITY: dict[str, int] = {
    "constant": 1, "feature": 1,
    "add": 2, "sub": 2,
    "mul": 3, "div": 3, "min": 3, "max": 3, "ceil": 3, "floor": 3,
    "pow": 4, "log": 4, "exp": 4, "sqrt": 4,
    "sin": 5, "cos": 5, "tanh": 5,
    "split_greedy": 4, "split_flexible": 4,
    "logistic": 3,
}


@dataclass(eq=True)
class Node:
    """One symbol of an expression tree.

    ``constant`` nodes store their value in ``weight`` and always keep it
    enabled. ``feature`` is the column index for ``feature`` and
    ``split_greedy`` nodes; ``threshold`` is used by both split kinds.
    """

    kind: str
    children: list[Node] = field(default_factory=list)
    weight: float = 1.0
    weight_enabled: bool = False
    feature: int | None = None
    threshold: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ARITY:
            raise StructureError(f"unknown node kind {self.kind!r}")
        if self.kind == "constant":
            self.weight_enabled = True
        elif self.kind == "logistic":
            self.weight_enabled = False

    @property
    def arity(self) -> int:
        return ARITY[self.kind]

    @property
    def is_terminal(self) -> bool:
        return self.kind in TERMINALS

    @property
    def is_split(self) -> bool:
        return self.kind in SPLITS

    @property
    def effective_weight(self) -> float:
        return self.weight if self.weight_enabled else 1.0

    def copy(self) -> Node:
        # Hand-rolled: deepcopy is an order of magnitude slower here.
        return Node(self.kind, [c.copy() for c in self.children], self.weight,
                    self.weight_enabled, self.feature, self.threshold)

    def walk(self) -> Iterator[Node]:
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def size(self) -> int:
        return sum(1 for _ in self.walk())

    def depth(self) -> int:
        if not self.children:
            return 1
        return 1 + max(c.depth() for c in self.children)


def walk_with_parents(root: Node) -> list[tuple[Node, Node | None, int, int]]:
    """Pre-order list of ``(node, parent, child_index, depth)``; root depth is 1."""
    out = []
    stack: list[tuple[Node, Node | None, int, int]] = [(root, None, -1, 1)]
    while stack:
        node, parent, idx, depth = stack.pop()
        out.append((node, parent, idx, depth))
        for i in range(len(node.children) - 1, -1, -1):
            stack.append((node.children[i], node, i, depth + 1))
    return out


@dataclass(eq=True)
class Program:
    """An expression tree plus the task it was built for.

    For classification the root is a ``logistic`` node and ``offset`` is the
    additive bias inside the sigmoid.
    """

    root: Node
    task: str = "regression"
    offset: float = 0.0
    feature_names: list[str] | None = None

    def copy(self) -> Program:
        names = list(self.feature_names) if self.feature_names is not None else None
        return Program(self.root.copy(), self.task, self.offset, names)

    @property
    def size(self) -> int:
        return self.root.size()

    @property
    def depth(self) -> int:
        return self.root.depth()

    def validate(self) -> None:
        for i, node in enumerate(self.root.walk()):
            if len(node.children) != node.arity:
                raise StructureError(
                    f"{node.kind} expects {node.arity} children, got {len(node.children)}")
            if node.kind == "logistic" and (i != 0 or self.task != "classification"):
                raise StructureError("logistic node is only allowed at a classification root")
            if node.kind in ("feature", "split_greedy") and node.feature is None:
                raise StructureError(f"{node.kind} node without a feature index")
        if self.task == "classification" and self.root.kind != "logistic":
            raise StructureError("classification programs need a logistic root")

    def max_feature(self) -> int:
        return max((n.feature for n in self.root.walk() if n.feature is not None), default=-1)


# ---------------------------------------------------------------------------
# parameters

@dataclass(frozen=True, eq=False)
class Slot:
    """Address of one scalar parameter: a node attribute or the program offset."""

    node: Node | None
    attr: str  # "weight", "threshold" or "offset"


def param_slots(program: Program) -> list[Slot]:
    """Parameter addresses in pre-order: per node weight then threshold; offset last."""
    slots = []
    for node in program.root.walk():
        if node.weight_enabled:
            slots.append(Slot(node, "weight"))
        if node.is_split:
            slots.append(Slot(node, "threshold"))
    if program.task == "classification":
        slots.append(Slot(None, "offset"))
    return slots


def _get(program: Program, slot: Slot) -> float:
    if slot.node is None:
        return program.offset
    value = getattr(slot.node, slot.attr)
    return 0.0 if value is None else value


def get_params(program: Program, slots: list[Slot] | None = None) -> np.ndarray:
    slots = param_slots(program) if slots is None else slots
    return np.array([_get(program, s) for s in slots], dtype=float)


def set_params(program: Program, theta, slots: list[Slot] | None = None) -> None:
    """Write ``theta`` back into the tree in place."""
    slots = param_slots(program) if slots is None else slots
    if len(theta) != len(slots):
        raise ValueError(f"expected {len(slots)} parameters, got {len(theta)}")
    for slot, value in zip(slots, theta):
        if slot.node is None:
            program.offset = float(value)
        else:
            setattr(slot.node, slot.attr, float(value))


# ---------------------------------------------------------------------------
# complexity

def node_complexity(node: Node, table: dict[str, int] | None = None) -> int:
    """Linear complexity of the subtree rooted at ``node``."""
    table = DEFAULT_COMPLEXITY if table is None else table
    try:
        return table[node.kind] + sum(node_complexity(c, table) for c in node.children)
    except KeyError as exc:
        raise StructureError(f"no complexity entry for {exc.args[0]!r}") from None


def linear_complexity(program: Program, table: dict[str, int] | None = None) -> int:
    return node_complexity(program.root, table)


# ---------------------------------------------------------------------------
# evaluation

def _check_input(X, min_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError("X must be a non-empty 2-d array")
    if X.shape[1] < min_features:
        raise StructureError(
            f"program references feature {min_features - 1} but X has {X.shape[1]} columns")
    return X


_P_LO = np.finfo(float).tiny
_P_HI = 1.0 - np.finfo(float).epsneg


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Clipped so probabilities stay strictly inside (0, 1).
    return np.clip(1.0 / (1.0 + np.exp(-z)), _P_LO, _P_HI)


def evaluate_node(node: Node, X: np.ndarray, offset: float = 0.0) -> np.ndarray:
    """Recursive evaluation of a (sub)tree on the rows of ``X``."""
    kind = node.kind
    if kind == "feature":
        out = X[:, node.feature]
    elif kind == "constant":
        return np.full(X.shape[0], node.weight)
    elif kind in BINARY:
        out = BINARY[kind](evaluate_node(node.children[0], X),
                           evaluate_node(node.children[1], X))
    elif kind in UNARY:
        out = UNARY[kind](evaluate_node(node.children[0], X))
    elif kind in ROUNDING:
        out = ROUNDING[kind](evaluate_node(node.children[0], X))
    elif kind in SPLITS:
        if kind == "split_greedy":
            cond = X[:, node.feature]
            branches = node.children
        else:
            cond = evaluate_node(node.children[0], X)
            branches = node.children[1:]
        mask = cond > node.threshold
        out = np.empty(X.shape[0])
        if mask.any():
            out[mask] = evaluate_node(branches[0], X[mask])
        rest = ~mask
        if rest.any():
            out[rest] = evaluate_node(branches[1], X[rest])
    elif kind == "logistic":
        return _sigmoid(evaluate_node(node.children[0], X) + offset)
    else:  # pragma: no cover - guarded by Node.__post_init__
        raise StructureError(kind)
    if node.weight_enabled:
        out = node.weight * out
    return out


def evaluate(program: Program, X) -> np.ndarray:
    """Predictions of ``program`` for every row of ``X``.

    Non-finite intermediate values propagate to the output instead of
    raising; callers decide how to score them.
    """
    X = _check_input(X, program.max_feature() + 1)
    with np.errstate(all="ignore"):
        return np.asarray(evaluate_node(program.root, X, program.offset), dtype=float)


# Gradients are kept sparse by column, ``{column: d value / d theta_column}``,
# so a parameter only costs memory on the rows its subtree sees. An empty
# dict means the subtree does not depend on any trainable parameter.
Grad = dict


def _scale(g: Grad, factor) -> Grad:
    return {k: col * factor for k, col in g.items()}


def _add(a: Grad, b: Grad) -> Grad:
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for k, col in b.items():
        out[k] = out[k] + col if k in out else col
    return out


def _eval_grad(node: Node, X: np.ndarray, cols: dict[int, int], offset: float,
               offset_col: int | None) -> tuple[np.ndarray, Grad]:
    """Forward-mode evaluation returning ``(value, d value / d theta)``.

    Split routing is piecewise constant, so no gradient flows through the
    routing decision.
    """
    kind = node.kind
    m = X.shape[0]
    if kind == "feature":
        v, g = X[:, node.feature], {}
    elif kind == "constant":
        v = np.full(m, node.weight)
        col = cols.get(id(node))
        return v, ({} if col is None else {col: np.ones(m)})
    elif kind in BINARY:
        a, ga = _eval_grad(node.children[0], X, cols, offset, offset_col)
        b, gb = _eval_grad(node.children[1], X, cols, offset, offset_col)
        v = BINARY[kind](a, b)
        if kind == "add":
            g = _add(ga, gb)
        elif kind == "sub":
            g = _add(ga, _scale(gb, -1.0))
        elif kind == "mul":
            g = _add(_scale(ga, b), _scale(gb, a))
        elif kind == "div":
            g = _add(_scale(ga, 1.0 / b), _scale(gb, -a / (b * b)))
        elif kind == "pow":
            g = _add(_scale(ga, b * np.power(a, b - 1.0)),
                     _scale(gb, v * np.log(a)) if gb else {})
        else:
            pick_a = (a <= b) if kind == "min" else (a >= b)
            g = _add(_scale(ga, pick_a.astype(float)),
                     _scale(gb, (~pick_a).astype(float)))
    elif kind in UNARY:
        a, ga = _eval_grad(node.children[0], X, cols, offset, offset_col)
        v = UNARY[kind](a)
        if not ga:
            g = {}
        elif kind == "sin":
            g = _scale(ga, np.cos(a))
        elif kind == "cos":
            g = _scale(ga, -np.sin(a))
        elif kind == "tanh":
            g = _scale(ga, 1.0 - v * v)
        elif kind == "exp":
            g = _scale(ga, v)
        elif kind == "log":
            g = _scale(ga, 1.0 / a)
        else:
            g = _scale(ga, 0.5 / v)
    elif kind in ROUNDING:
        a, _ = _eval_grad(node.children[0], X, cols, offset, offset_col)
        v, g = ROUNDING[kind](a), {}
    elif kind in SPLITS:
        if kind == "split_greedy":
            cond = X[:, node.feature]
            branches = node.children
        else:
            cond = evaluate_node(node.children[0], X)
            branches = node.children[1:]
        mask = cond > node.threshold
        rest = ~mask
        v = np.empty(m)
        g = {}
        for sel, branch in ((mask, branches[0]), (rest, branches[1])):
            if not sel.any():
                continue
            bv, bg = _eval_grad(branch, X[sel], cols, offset, offset_col)
            v[sel] = bv
            for k, part in bg.items():
                full = g.get(k)
                if full is None:
                    full = g[k] = np.zeros(m)
                full[sel] += part
    elif kind == "logistic":
        a, ga = _eval_grad(node.children[0], X, cols, offset, offset_col)
        v = _sigmoid(a + offset)
        if offset_col is not None:
            ga = _add(ga, {offset_col: np.ones(m)})
        return v, _scale(ga, v * (1.0 - v))
    else:  # pragma: no cover
        raise StructureError(kind)

    if node.weight_enabled:
        w = node.weight
        g = _scale(g, w)
        col = cols.get(id(node))
        if col is not None:
            g = _add(g, {col: v})
        v = w * v
    return v, g


def evaluate_with_jacobian(program: Program, X, slots: list[Slot]):
    """Predictions and their Jacobian with respect to the parameters in ``slots``.

    Threshold slots are accepted but always get a zero column.
    """
    X = _check_input(X, program.max_feature() + 1)
    cols: dict[int, int] = {}
    offset_col = None
    for j, slot in enumerate(slots):
        if slot.node is None:
            offset_col = j
        elif slot.attr == "weight":
            cols[id(slot.node)] = j
    with np.errstate(all="ignore"):
        v, g = _eval_grad(program.root, X, cols, program.offset, offset_col)
    J = np.zeros((X.shape[0], len(slots)))
    for k, col in g.items():
        J[:, k] = col
    return np.asarray(v, dtype=float), J
