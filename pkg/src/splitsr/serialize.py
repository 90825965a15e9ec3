"""JSON model documents, infix strings, and if/else pseudocode."""

from __future__ import annotations

import json
import math

from .errors import DocumentError
from .tree import ARITY, BINARY, ROUNDING, UNARY, Node, Program, get_params, linear_complexity

_INFIX = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def node_to_dict(node: Node) -> dict:
    d: dict = {"kind": node.kind}
    if node.feature is not None:
        d["feature"] = node.feature
    d["weight"] = node.weight
    d["weight_enabled"] = node.weight_enabled
    if node.threshold is not None:
        d["threshold"] = node.threshold
    d["children"] = [node_to_dict(c) for c in node.children]
    return d


def to_document(program: Program, complexity_table: dict[str, int] | None = None) -> dict:
    doc: dict = {"task": program.task}
    if program.feature_names is not None:
        doc["features"] = list(program.feature_names)
    doc["nodes"] = [node_to_dict(program.root)]
    if program.task == "classification":
        doc["offset"] = program.offset
    doc["params"] = [float(v) for v in get_params(program)]
    doc["complexity"] = linear_complexity(program, complexity_table)
    doc["size"] = program.size
    return doc


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(f"expected a number, got {value!r}", path)
    return float(value)


def node_from_dict(d, path: str = "$.nodes[0]") -> Node:
    if not isinstance(d, dict):
        raise DocumentError("node must be an object", path)
    kind = d.get("kind")
    if kind not in ARITY:
        raise DocumentError(f"unknown kind {kind!r}", path)
    children = d.get("children", [])
    if not isinstance(children, list) or len(children) != ARITY[kind]:
        raise DocumentError(f"{kind} needs {ARITY[kind]} children", path)
    feature = d.get("feature")
    if feature is not None and (isinstance(feature, bool) or not isinstance(feature, int) or feature < 0):
        raise DocumentError(f"bad feature index {feature!r}", path)
    if kind in ("feature", "split_greedy") and feature is None:
        raise DocumentError(f"{kind} needs a feature index", path)
    threshold = d.get("threshold")
    if kind.startswith("split"):
        if threshold is None:
            raise DocumentError("split needs a threshold", path)
        threshold = _number(threshold, path + ".threshold")
    enabled = d.get("weight_enabled", False)
    if not isinstance(enabled, bool):
        raise DocumentError("weight_enabled must be a boolean", path)
    return Node(kind,
                [node_from_dict(c, f"{path}.children[{i}]") for i, c in enumerate(children)],
                _number(d.get("weight", 1.0), path + ".weight"),
                enabled, feature, threshold)


def from_document(doc) -> Program:
    if not isinstance(doc, dict):
        raise DocumentError("document must be an object")
    task = doc.get("task", "regression")
    if task not in ("regression", "classification"):
        raise DocumentError(f"unknown task {task!r}", "$.task")
    nodes = doc.get("nodes")
    if not isinstance(nodes, list) or len(nodes) != 1:
        raise DocumentError("nodes must be a one-element list holding the root", "$.nodes")
    names = doc.get("features")
    if names is not None and (not isinstance(names, list) or not all(isinstance(n, str) for n in names)):
        raise DocumentError("features must be a list of strings", "$.features")
    program = Program(node_from_dict(nodes[0]), task,
                      _number(doc.get("offset", 0.0), "$.offset"), names)
    try:
        program.validate()
    except ValueError as exc:
        raise DocumentError(str(exc), "$.nodes[0]") from None
    if "params" in doc:
        expected = [float(v) for v in get_params(program)]
        given = doc["params"]
        same = isinstance(given, list) and len(given) == len(expected) and all(
            (a == b) or (math.isnan(a) and isinstance(b, float) and math.isnan(b))
            for a, b in zip(expected, given))
        if not same:
            raise DocumentError("params disagree with the node values", "$.params")
    return program


def dumps(program: Program, complexity_table=None) -> str:
    return json.dumps(to_document(program, complexity_table), indent=2) + "\n"


def loads(text: str) -> Program:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from None
    return from_document(doc)


# ---------------------------------------------------------------------------
# text renderings

def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _feature_name(idx: int, names) -> str:
    if names is not None and idx < len(names):
        return names[idx]
    return f"x{idx}"


def _weighted(node: Node, body: str, atomic: bool) -> str:
    if not node.weight_enabled or node.kind == "constant":
        return body
    return f"{_fmt(node.weight)}*{body if atomic else '(' + body + ')'}"


def _infix(node: Node, names, offset: float) -> tuple[str, bool]:
    """Rendered text and whether it binds tightly enough to skip parentheses."""
    kind = node.kind
    if kind == "constant":
        return _fmt(node.weight), True
    if kind == "feature":
        return _weighted(node, _feature_name(node.feature, names), True), not node.weight_enabled
    args = [_infix(c, names, offset) for c in node.children]
    if kind in _INFIX:
        a, b = (t if ok else f"({t})" for t, ok in args)
        body, atomic = f"{a} {_INFIX[kind]} {b}", False
    elif kind in BINARY or kind in UNARY or kind in ROUNDING:
        body, atomic = f"{kind}({', '.join(t for t, _ in args)})", True
    elif kind == "split_greedy":
        cond = f"{_feature_name(node.feature, names)} > {_fmt(node.threshold)}"
        body, atomic = f"({args[0][0]} if {cond} else {args[1][0]})", True
    elif kind == "split_flexible":
        cond = f"{args[0][0]} > {_fmt(node.threshold)}"
        body, atomic = f"({args[1][0]} if {cond} else {args[2][0]})", True
    else:  # logistic
        body = f"logistic({args[0][0]} + {_fmt(offset)})"
        return body, True
    if node.weight_enabled:
        return _weighted(node, body, atomic), False
    return body, atomic


def to_infix(program: Program) -> str:
    return _infix(program.root, program.feature_names, program.offset)[0]


class _Emitter:
    def __init__(self, names):
        self.names = names
        self.lines: list[str] = []
        self.counter = 0

    def emit(self, line: str, indent: int) -> None:
        self.lines.append("    " * indent + line)

    def expr(self, node: Node, indent: int) -> str:
        """Expression text for ``node``; splits become if/else blocks on temporaries."""
        if node.is_split:
            self.counter += 1
            var = f"s{self.counter}"
            self.assign(node, var, indent)
            return _weighted(node, var, True) if node.weight_enabled else var
        if not any(n.is_split for n in node.walk()):
            return _infix(node, self.names, 0.0)[0]
        parts = [self.expr(c, indent) for c in node.children]
        if node.kind in _INFIX:
            body = f"({parts[0]} {_INFIX[node.kind]} {parts[1]})"
        else:
            body = f"{node.kind}({', '.join(parts)})"
        return _weighted(node, body, True)

    def assign(self, node: Node, var: str, indent: int) -> None:
        if node.kind == "split_greedy":
            cond = _feature_name(node.feature, self.names)
            branches = node.children
        else:
            cond = self.expr(node.children[0], indent)
            branches = node.children[1:]
        self.emit(f"if {cond} > {_fmt(node.threshold)}:", indent)
        self.emit(f"{var} = {self.expr(branches[0], indent + 1)}", indent + 1)
        self.emit("else:", indent)
        self.emit(f"{var} = {self.expr(branches[1], indent + 1)}", indent + 1)


def _returning(em: _Emitter, node: Node, indent: int, wrap) -> None:
    """Emit a block that returns ``wrap(value of node)``; top-level splits nest as if/else."""
    if node.is_split and not node.weight_enabled:
        if node.kind == "split_greedy":
            cond = _feature_name(node.feature, em.names)
            branches = node.children
        else:
            cond = em.expr(node.children[0], indent)
            branches = node.children[1:]
        em.emit(f"if {cond} > {_fmt(node.threshold)}:", indent)
        _returning(em, branches[0], indent + 1, wrap)
        em.emit("else:", indent)
        _returning(em, branches[1], indent + 1, wrap)
        return
    em.emit(f"return {wrap(em.expr(node, indent))}", indent)


def to_pseudocode(program: Program) -> str:
    """Nested if/else rendering of a program, one statement per line."""
    em = _Emitter(program.feature_names)
    if program.task == "classification":
        offset = _fmt(program.offset)
        _returning(em, program.root.children[0], 0,
                   lambda e: f"logistic({e} + {offset})")
    else:
        _returning(em, program.root, 0, lambda e: e)
    return "\n".join(em.lines) + "\n"
