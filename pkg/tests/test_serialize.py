import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from splitsr.config import SearchConfig
from splitsr.errors import DocumentError
from splitsr.generate import generate_random
from splitsr.serialize import (dumps, from_document, loads, to_document, to_infix,
                               to_pseudocode)
from splitsr.tree import Node, Program, evaluate, get_params


def _random_program(seed, task="regression"):
    rng = np.random.default_rng(seed)
    cfg = SearchConfig(functions=("add", "sub", "mul", "div", "log", "max", "floor", "split"),
                       split_seeded_init=False, task=task, max_size=30)
    p = generate_random(cfg, rng, 4)
    for node in p.root.walk():
        if node.kind != "logistic":
            node.weight_enabled = node.kind == "constant" or bool(rng.random() < 0.5)
            node.weight = float(rng.normal() * 10 ** rng.uniform(-8, 8))
        if node.is_split:
            node.threshold = float(rng.normal())
    p.offset = float(rng.normal()) if task == "classification" else 0.0
    p.feature_names = ["a", "b", "c", "d"]
    return p


@given(st.integers(0, 100_000), st.sampled_from(["regression", "classification"]))
def test_round_trip_is_exact(seed, task):
    p = _random_program(seed, task)
    q = loads(dumps(p))
    assert q == p
    assert get_params(q).tobytes() == get_params(p).tobytes()
    doc = json.loads(dumps(p))
    assert to_document(from_document(doc)) == doc


def test_disabled_weights_leave_params_but_stay_in_nodes():
    node = Node("feature", feature=0, weight=2.5, weight_enabled=False)
    doc = to_document(Program(node))
    assert doc["params"] == []
    assert doc["nodes"][0]["weight"] == 2.5
    assert loads(json.dumps(doc)).root.weight == 2.5


def test_document_fields():
    p = Program(Node("logistic", [Node("constant", weight=1.0)]), "classification", offset=0.5)
    doc = to_document(p)
    assert set(doc) == {"task", "nodes", "offset", "params", "complexity", "size"}
    assert doc["size"] == 2 and doc["complexity"] == 4


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d["nodes"][0]["children"][1].update(kind="nope"), "$.nodes[0].children[1]"),
    (lambda d: d["nodes"][0]["children"][0].update(children=[]), "$.nodes[0].children[0]"),
    (lambda d: d["nodes"][0].pop("threshold"), "$.nodes[0]"),
    (lambda d: d["nodes"][0]["children"][0].update(weight="x"), "$.nodes[0].children[0].weight"),
    (lambda d: d.update(task="ranking"), "$.task"),
    (lambda d: d.update(params=[9.0]), "$.params"),
])
def test_malformed_documents_name_the_bad_path(mutate, path):
    split = Node("split_greedy", [Node("add", [Node("constant", weight=1.0),
                                               Node("constant", weight=2.0)]),
                                  Node("constant", weight=3.0)], feature=0, threshold=0.5)
    doc = to_document(Program(split))
    mutate(doc)
    with pytest.raises(DocumentError) as exc:
        from_document(doc)
    assert exc.value.path == path
    assert str(exc.value).startswith(path)


def test_invalid_json_is_a_document_error():
    with pytest.raises(DocumentError):
        loads("{not json")


def test_pseudocode_for_single_greedy_split():
    split = Node("split_greedy", [Node("constant", weight=1.0), Node("constant", weight=0.0)],
                 feature=0, threshold=2.5)
    text = to_pseudocode(Program(split, feature_names=["rr"]))
    assert text.count("if rr > 2.5:") == 1
    assert text.splitlines() == ["if rr > 2.5:", "    return 1", "else:", "    return 0"]


def test_pseudocode_wraps_classification_output():
    body = Node("split_greedy", [Node("constant", weight=3.0),
                                 Node("feature", feature=1, weight=2.0, weight_enabled=True)],
                feature=0, threshold=1.0)
    p = Program(Node("logistic", [body]), "classification", offset=-1.0, feature_names=["hr", "age"])
    lines = to_pseudocode(p).splitlines()
    assert lines[0] == "if hr > 1:"
    assert lines[1].strip() == "return logistic(3 + -1)"
    assert lines[3].strip() == "return logistic(2*age + -1)"


def test_pseudocode_nests_inner_splits_into_temporaries():
    inner = Node("split_greedy", [Node("constant", weight=1.0), Node("constant", weight=2.0)],
                 feature=1, threshold=0.0)
    p = Program(Node("add", [inner, Node("feature", feature=0)]), feature_names=["a", "b"])
    text = to_pseudocode(p)
    assert "if b > 0:" in text and "s1 = 1" in text and text.rstrip().endswith("return (s1 + a)")


def test_infix_is_evaluable_python_for_arithmetic():
    p = Program(Node("add", [Node("mul", [Node("feature", feature=0, weight=2.0, weight_enabled=True),
                                          Node("feature", feature=1)]),
                             Node("constant", weight=-3.0)]), feature_names=["a", "b"])
    text = to_infix(p)
    X = np.array([[1.5, 2.0], [0.5, -1.0]])
    values = [eval(text, {}, {"a": a, "b": b}) for a, b in X]
    assert values == evaluate(p, X).tolist()
