from collections import Counter

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from splitsr.config import MUTATIONS, SearchConfig
from splitsr.generate import generate_random
from splitsr.tree import Node, Program
from splitsr.variation import OPERATORS, crossover, delete, point, vary


def test_delete_on_a_terminal_is_not_applicable(rng):
    p = Program(Node("feature", feature=0))
    assert delete(p, SearchConfig(), rng, 2) is None
    cfg = SearchConfig(mutation_weights={"delete": 1.0}, crossover_prob=0.0)
    child, op = vary(p, None, cfg, rng, 2)
    assert op == "clone" and child == p and child is not p


@given(st.integers(0, 10_000))
def test_point_mutation_keeps_size(seed):
    rng = np.random.default_rng(seed)
    cfg = SearchConfig(split_seeded_init=False)
    p = generate_random(cfg, rng, 4)
    child = point(p, cfg, rng, 4)
    if child is not None:
        assert child.size == p.size
        assert child != p


def test_offspring_respect_bounds_and_every_operator_fires():
    rng = np.random.default_rng(0)
    cfg = SearchConfig(max_size=30, max_depth=6)
    pop = [generate_random(cfg, rng, 5) for _ in range(50)]
    seen = Counter()
    for k in range(10_000):
        a, b = pop[k % 50], pop[(7 * k + 3) % 50]
        child, op = vary(a, b, cfg, rng, 5)
        assert child.size <= cfg.max_size and child.depth <= cfg.max_depth
        child.validate()
        seen[op] += 1
        if k % 5 == 0:
            pop[k % 50] = child
    assert set(MUTATIONS) | {"crossover"} <= set(seen)


def test_parents_are_never_modified(rng):
    cfg = SearchConfig(split_seeded_init=False, task="classification")
    for _ in range(300):
        a, b = generate_random(cfg, rng, 3), generate_random(cfg, rng, 3)
        sa, sb = a.copy(), b.copy()
        for op in OPERATORS.values():
            op(a, cfg, rng, 3)
        crossover(a, b, cfg, rng, 3)
        assert a == sa and b == sb


def test_logistic_root_is_preserved(rng):
    cfg = SearchConfig(split_seeded_init=False, task="classification", max_size=20)
    pop = [generate_random(cfg, rng, 3) for _ in range(20)]
    for k in range(2000):
        child, _ = vary(pop[k % 20], pop[(k + 1) % 20], cfg, rng, 3)
        child.validate()
        assert child.root.kind == "logistic"
        pop[k % 20] = child


def test_toggle_flips_exactly_one_weight(rng):
    cfg = SearchConfig(split_seeded_init=False)
    for _ in range(100):
        p = generate_random(cfg, rng, 3)
        for name, want in (("toggle_on", 1), ("toggle_off", -1)):
            child = OPERATORS[name](p, cfg, rng, 3)
            if child is None:
                continue
            before = sum(n.weight_enabled for n in p.root.walk())
            after = sum(n.weight_enabled for n in child.root.walk())
            assert after - before == want
            assert [n.kind for n in child.root.walk()] == [n.kind for n in p.root.walk()]


def test_insert_grows_and_delete_shrinks(rng):
    cfg = SearchConfig(split_seeded_init=False, max_size=200, max_depth=50)
    for _ in range(200):
        p = generate_random(cfg, rng, 3, max_size=20)
        grown = OPERATORS["insert"](p, cfg, rng, 3)
        assert grown.size > p.size
        shrunk = delete(p, cfg, rng, 3)
        if shrunk is not None:
            assert shrunk.size < p.size


def test_same_seed_same_offspring():
    cfg = SearchConfig()
    pop = [generate_random(cfg, np.random.default_rng(k), 3) for k in range(2)]
    a = vary(pop[0], pop[1], cfg, np.random.default_rng(9), 3)
    b = vary(pop[0], pop[1], cfg, np.random.default_rng(9), 3)
    assert a == b
