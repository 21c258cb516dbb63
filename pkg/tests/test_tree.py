import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rlgp.gp.decode import compile_nodes, evaluate_nodes, evaluate_rule
from rlgp.gp.tree import (
    FUNCTIONS,
    MAX_DEPTH,
    TERMINALS,
    RuleTree,
    crossover,
    crossover_at,
    generate,
    is_valid,
    mutate,
    node_depths,
    parse,
    ramped_half_and_half,
    subtree_end,
    to_text,
    tree_depth,
)

seeds = st.integers(0, 2**32 - 1)


def test_depth_counts_edges():
    assert tree_depth(("SC",)) == 0
    assert tree_depth(("+", "SC", "SCN")) == 1
    assert tree_depth(("+", "sin", "SC", "SCN")) == 2
    assert node_depths(("+", "sin", "SC", "SCN")) == [0, 1, 2, 1]


def test_subtree_end():
    nodes = ("*", "+", "SC", 0.5, "cos", "NPT")
    assert subtree_end(nodes, 0) == 6
    assert subtree_end(nodes, 1) == 4
    assert subtree_end(nodes, 4) == 6


def test_parse_and_print_round_trip():
    text = "(* SC (+ SCN 0.37))"
    tree = parse(text)
    assert tree.nodes == ("*", "SC", "+", "SCN", 0.37)
    assert to_text(tree) == text
    assert tree.terminals_used() == frozenset({"SC", "SCN"})


@pytest.mark.parametrize("text", ["(+ SC)", "(foo SC SC)", "BOGUS", "(+ SC SC) SC", "(+ SC SC", ")", "inf"])
def test_parse_rejects_malformed_text(text):
    with pytest.raises(ValueError):
        parse(text)


def test_empty_tree_rejected():
    with pytest.raises(ValueError):
        RuleTree(())


def test_is_valid_catches_bad_sequences():
    assert not is_valid(RuleTree(("+", "SC")))
    assert not is_valid(RuleTree(("SC", "SC")))
    assert not is_valid(RuleTree(("XYZ",)))
    assert not is_valid(RuleTree((float("nan"),)))
    assert is_valid(RuleTree(("sin", 0.25)))


@given(seeds)
def test_ramped_half_and_half_depths(seed):
    trees = ramped_half_and_half(20, np.random.default_rng(seed))
    assert len(trees) == 20
    for i, t in enumerate(trees):
        assert is_valid(t)
        assert 2 <= t.depth <= 6
    # the full half reaches its nominal height
    assert [t.depth for t in trees[0:10:2]] == [2, 3, 4, 5, 6]


@given(seeds, st.integers(0, 5))
def test_grow_respects_height(seed, h):
    nodes = generate(np.random.default_rng(seed), "grow", h)
    assert tree_depth(nodes) <= h
    assert is_valid(RuleTree(tuple(nodes)))


def test_unknown_generation_method():
    with pytest.raises(ValueError):
        generate(np.random.default_rng(0), "half", 3)


@given(seeds)
def test_crossover_and_mutation_keep_trees_valid(seed):
    rng = np.random.default_rng(seed)
    a, b = ramped_half_and_half(2, rng, 5, 6)
    for child in crossover(a, b, rng) + (mutate(a, rng),):
        assert is_valid(child, MAX_DEPTH)


def test_crossover_swaps_whole_subtrees():
    a = parse("(+ SC (* SCN NPT))")
    b = parse("(- RNP (sin ANS))")
    c1, c2 = crossover_at(a, b, 2, 2, np.random.default_rng(0))
    assert to_text(c1) == "(+ SC (sin ANS))"
    assert to_text(c2) == "(- RNP (* SCN NPT))"


def test_oversized_crossover_falls_back_to_a_leaf():
    deep = RuleTree(("sin",) * 8 + ("SC",))
    assert deep.depth == 8
    c1, _ = crossover_at(deep, deep, 8, 0, np.random.default_rng(0), max_depth=8)
    assert c1.depth <= 8
    assert c1.nodes[-1] == "SC"


def test_rand_is_frozen_into_the_tree():
    rng = np.random.default_rng(7)
    tree = RuleTree(tuple(generate(rng, "full", 4)))
    consts = [n for n in tree.nodes if isinstance(n, float)]
    assert all(0.0 <= c < 1.0 for c in consts)
    assert parse(to_text(tree)) == tree


# --- evaluation ---------------------------------------------------------------

LOOKUP = {t: np.float64(1.0) for t in TERMINALS} | {"SC": np.float64(2.0), "SCN": np.float64(4.0), "NPT": np.float64(3.0)}


@pytest.mark.parametrize(
    "text, expected",
    [
        ("(/ SC 0.0)", 1.0),
        ("(/ 0.0 0.0)", 1.0),
        ("(/ SC (- SC SC))", 1.0),
        ("(/ SCN SC)", 2.0),
        ("(max SC (min NPT SCN))", 3.0),
        ("(cos 0.0)", 1.0),
    ],
)
def test_scalar_evaluation(text, expected):
    nodes = parse(text).nodes
    assert evaluate_nodes(nodes, LOOKUP.__getitem__) == expected
    assert evaluate_rule(nodes, LOOKUP.__getitem__) == expected


def test_protected_division_on_arrays():
    vals = {"SC": np.array([1.0, 2.0, 3.0]), "SCN": np.array([0.0, 2.0, 0.0])}
    out = evaluate_rule(parse("(/ SC SCN)").nodes, vals.__getitem__)
    np.testing.assert_array_equal(out, [1.0, 1.0, 1.0])


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=8), st.integers(0, 7))
def test_division_fuzz_zero_denominators_give_one(nums, zero_at):
    num = np.array(nums)
    den = np.array(nums)
    den[zero_at % len(den)] = 0.0
    vals = {"SC": num, "SCN": den}
    out = evaluate_rule(("/", "SC", "SCN"), vals.__getitem__)
    assert np.all(out[den == 0] == 1.0)
    ok = den != 0
    np.testing.assert_allclose(out[ok], num[ok] / den[ok])


def test_overflow_is_clamped_to_zero():
    big = {"SC": np.float64(1e300)}
    nodes = parse("(* SC SC)").nodes
    assert evaluate_nodes(nodes, big.__getitem__) == 0.0
    assert evaluate_rule(nodes, big.__getitem__) == 0.0


@given(seeds)
def test_compiled_path_matches_stack_interpreter(seed):
    rng = np.random.default_rng(seed)
    vals = {t: rng.normal(0, 10, 6) for t in TERMINALS}
    vals["NPT"] = np.float64(25.0)
    for tree in ramped_half_and_half(6, rng):
        slow = evaluate_nodes(tree.nodes, vals.__getitem__)
        fast = evaluate_rule(tree.nodes, vals.__getitem__)
        np.testing.assert_allclose(np.broadcast_to(fast, (6,)), np.broadcast_to(slow, (6,)), rtol=1e-12, atol=0)


def test_compiled_rules_are_cached():
    nodes = parse("(+ SC 1.5)").nodes
    assert compile_nodes(nodes) is compile_nodes(nodes)


def test_function_table():
    assert FUNCTIONS == {"+": 2, "-": 2, "*": 2, "/": 2, "sin": 1, "cos": 1, "max": 2, "min": 2}
    assert len(TERMINALS) == 11


def test_validity_sweep_over_many_operations():
    rng = np.random.default_rng(123)
    pool = ramped_half_and_half(50, rng)
    for _ in range(10_000):
        i, j = rng.integers(len(pool), size=2)
        if rng.random() < 0.5:
            kids = crossover(pool[i], pool[j], rng)
        else:
            kids = (mutate(pool[i], rng),)
        for k in kids:
            assert is_valid(k, MAX_DEPTH)
        pool[int(i)] = kids[0]
