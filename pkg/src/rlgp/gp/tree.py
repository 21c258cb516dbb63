"""Expression-tree priority rules stored as flat prefix sequences.

A node is a function name, a terminal name, or a float constant (the
ephemeral random constant, frozen when the node is created).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

FUNCTIONS: dict[str, int] = {
    "+": 2,
    "-": 2,
    "*": 2,
    "/": 2,
    "sin": 1,
    "cos": 1,
    "max": 2,
    "min": 2,
}

# RAND is realised as a float constant node, not looked up at decode time.
TERMINALS: tuple[str, ...] = (
    "NPT", "RNP", "SC", "SCN", "ANS", "NSR", "NCP", "NCR", "SCW", "SMP", "WEC",
)
RAND = "RAND"

MAX_DEPTH = 8

Node = Union[str, float]


@dataclass(frozen=True)
class RuleTree:
    nodes: tuple[Node, ...]

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("empty tree")

    def __str__(self) -> str:
        return to_text(self)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def depth(self) -> int:
        return tree_depth(self.nodes)

    def terminals_used(self) -> frozenset[str]:
        return frozenset(n for n in self.nodes if isinstance(n, str) and n not in FUNCTIONS)


def arity(node: Node) -> int:
    if isinstance(node, str):
        return FUNCTIONS.get(node, 0)
    return 0


def subtree_end(nodes, start: int) -> int:
    """Index one past the subtree rooted at ``start``."""
    need = 1
    i = start
    while need:
        need += arity(nodes[i]) - 1
        i += 1
    return i


def tree_depth(nodes) -> int:
    """Edges on the longest root-to-leaf path (a lone terminal has depth 0)."""
    best = 0
    stack = [0]
    for node in nodes:
        d = stack.pop()
        best = max(best, d)
        stack.extend([d + 1] * arity(node))
    return best


def node_depths(nodes) -> list[int]:
    out = []
    stack = [0]
    for node in nodes:
        d = stack.pop()
        out.append(d)
        stack.extend([d + 1] * arity(node))
    return out


def is_valid(tree: RuleTree, max_depth: int = MAX_DEPTH) -> bool:
    need = 1
    for node in tree.nodes:
        if need == 0:
            return False
        if isinstance(node, str):
            if node not in FUNCTIONS and node not in TERMINALS:
                return False
        elif not isinstance(node, float) or not math.isfinite(node):
            return False
        need += arity(node) - 1
    return need == 0 and tree.depth <= max_depth


# -- text form -------------------------------------------------------------

def _fmt(node: Node) -> str:
    return repr(float(node)) if isinstance(node, float) else node


def to_text(tree: RuleTree) -> str:
    def emit(i: int) -> tuple[str, int]:
        node = tree.nodes[i]
        a = arity(node)
        if not a:
            return _fmt(node), i + 1
        parts = [_fmt(node)]
        i += 1
        for _ in range(a):
            text, i = emit(i)
            parts.append(text)
        return "(" + " ".join(parts) + ")", i

    return emit(0)[0]


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse(text: str) -> RuleTree:
    """Parse prefix notation such as ``(* SC (+ SCN 0.37))``."""
    tokens = _TOKEN.findall(text)
    nodes: list[Node] = []
    pos = 0

    def expr():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError(f"unexpected end of rule text: {text!r}")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens):
                raise ValueError("dangling '('")
            head = tokens[pos]
            pos += 1
            if head not in FUNCTIONS:
                raise ValueError(f"unknown function {head!r}")
            nodes.append(head)
            for _ in range(FUNCTIONS[head]):
                expr()
            if pos >= len(tokens) or tokens[pos] != ")":
                raise ValueError(f"expected ')' after {FUNCTIONS[head]} arguments of {head!r}")
            pos += 1
        elif tok == ")":
            raise ValueError("unexpected ')'")
        elif tok in TERMINALS:
            nodes.append(tok)
        else:
            try:
                val = float(tok)
            except ValueError:
                raise ValueError(f"unknown terminal {tok!r}") from None
            if not math.isfinite(val):
                raise ValueError("constants must be finite")
            nodes.append(val)

    expr()
    if pos != len(tokens):
        raise ValueError(f"trailing tokens in rule text: {text!r}")
    return RuleTree(tuple(nodes))


# -- generation ------------------------------------------------------------

def _random_terminal(rng: np.random.Generator) -> Node:
    k = int(rng.integers(len(TERMINALS) + 1))
    if k == len(TERMINALS):
        return float(rng.random())
    return TERMINALS[k]


def _random_function(rng: np.random.Generator) -> str:
    names = list(FUNCTIONS)
    return names[int(rng.integers(len(names)))]


def generate(rng: np.random.Generator, method: str, height: int, min_depth: int = 0) -> list[Node]:
    """Grow or full generation of a prefix node list of exactly/at most ``height``."""
    if method not in ("grow", "full"):
        raise ValueError(f"unknown method {method!r}")
    n_term = len(TERMINALS) + 1
    n_func = len(FUNCTIONS)
    out: list[Node] = []
    stack = [0]
    while stack:
        d = stack.pop()
        if d >= height:
            leaf = True
        elif d < min_depth or method == "full":
            leaf = False
        else:
            leaf = rng.random() < n_term / (n_term + n_func)
        if leaf:
            out.append(_random_terminal(rng))
        else:
            f = _random_function(rng)
            out.append(f)
            stack.extend([d + 1] * FUNCTIONS[f])
    return out


def ramped_half_and_half(n: int, rng: np.random.Generator, min_height: int = 2, max_height: int = 6) -> list[RuleTree]:
    if n < 2:
        raise ValueError("population size must be at least 2")
    heights = list(range(min_height, max_height + 1))
    out = []
    for i in range(n):
        method = "full" if i % 2 == 0 else "grow"
        h = heights[(i // 2) % len(heights)]
        out.append(RuleTree(tuple(generate(rng, method, h, min_depth=min_height))))
    return out


# -- variation -------------------------------------------------------------

def _leaves(nodes, start: int, end: int) -> list[Node]:
    return [n for n in nodes[start:end] if arity(n) == 0]


def _splice(host, start: int, donor_sub, rng: np.random.Generator, max_depth: int) -> tuple[Node, ...]:
    end = subtree_end(host, start)
    child = tuple(host[:start]) + tuple(donor_sub) + tuple(host[end:])
    if tree_depth(child) > max_depth:
        leaves = _leaves(donor_sub, 0, len(donor_sub))
        leaf = leaves[int(rng.integers(len(leaves)))]
        child = tuple(host[:start]) + (leaf,) + tuple(host[end:])
    return child


def crossover_at(a: RuleTree, b: RuleTree, i: int, j: int, rng: np.random.Generator, max_depth: int = MAX_DEPTH):
    """Swap the subtree at node ``i`` of ``a`` with the subtree at node ``j`` of ``b``."""
    sub_a = a.nodes[i:subtree_end(a.nodes, i)]
    sub_b = b.nodes[j:subtree_end(b.nodes, j)]
    c1 = _splice(a.nodes, i, sub_b, rng, max_depth)
    c2 = _splice(b.nodes, j, sub_a, rng, max_depth)
    return RuleTree(c1), RuleTree(c2)


def crossover(a: RuleTree, b: RuleTree, rng: np.random.Generator, max_depth: int = MAX_DEPTH):
    i = int(rng.integers(len(a.nodes)))
    j = int(rng.integers(len(b.nodes)))
    return crossover_at(a, b, i, j, rng, max_depth)


def mutate_at(a: RuleTree, i: int, rng: np.random.Generator, max_depth: int = MAX_DEPTH, height: int = 3) -> RuleTree:
    h = int(rng.integers(0, height + 1))
    sub = generate(rng, "grow", h)
    return RuleTree(_splice(a.nodes, i, sub, rng, max_depth))


def mutate(a: RuleTree, rng: np.random.Generator, max_depth: int = MAX_DEPTH) -> RuleTree:
    return mutate_at(a, int(rng.integers(len(a.nodes))), rng, max_depth)
