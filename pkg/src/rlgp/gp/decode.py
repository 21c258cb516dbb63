"""Turning a priority rule into a team.

Each step scores every remaining candidate, seats the best one (lowest id on
ties) in its best-matching open position it is qualified for, and updates the
problem-state features the rule reads. Candidates that fit no open position
are dropped. Rule evaluation is vectorised over candidates.
"""

from __future__ import annotations

from functools import cached_property
from typing import Callable, Optional, Protocol

import numpy as np

from rlgp.evaluator import Assignment
from rlgp.gp.tree import FUNCTIONS, TERMINALS, RuleTree
from rlgp.problem import Instance

_TERMINAL_SET = frozenset(TERMINALS)
_ONE = np.float64(1.0)
_ZERO = np.float64(0.0)


def _fin(x):
    """Replace non-finite values with 0."""
    if isinstance(x, np.ndarray):
        bad = ~np.isfinite(x)
        if bad.any():
            x = np.where(bad, 0.0, x)
        return x
    return x if np.isfinite(x) else _ZERO


def _pdiv(a, b):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        zero = np.asarray(b) == 0
        if zero.any():
            return _fin(np.where(zero, 1.0, a / np.where(zero, 1.0, b)))
        return _fin(a / b)
    return _ONE if b == 0 else _fin(a / b)


_OPS = {
    "+": lambda a, b: _fin(a + b),
    "-": lambda a, b: _fin(a - b),
    "*": lambda a, b: _fin(a * b),
    "/": _pdiv,
    "sin": lambda a: _fin(np.sin(a)),
    "cos": lambda a: _fin(np.cos(a)),
    "max": np.maximum,
    "min": np.minimum,
}
_UNARY = frozenset(f for f, a in FUNCTIONS.items() if a == 1)


def evaluate_nodes(nodes, lookup: Callable[[str], object]):
    """Stack evaluation of a prefix node sequence; ``lookup`` supplies terminals.

    Every intermediate non-finite value is replaced by 0.
    """
    stack = []
    push, pop = stack.append, stack.pop
    with np.errstate(all="ignore"):
        for node in reversed(nodes):
            if type(node) is float:
                push(np.float64(node))
            elif node in _TERMINAL_SET:
                push(lookup(node))
            elif node in _UNARY:
                push(_OPS[node](pop()))
            else:
                a = pop()
                push(_OPS[node](a, pop()))
    return _fin(stack[0])


def _fast_div(a, b):
    if isinstance(b, np.ndarray):
        zero = b == 0
        if zero.any():
            return np.where(zero, 1.0, a / np.where(zero, 1.0, b))
        return a / b
    return _ONE if b == 0 else a / b


_FAST_NS = {"_div": _fast_div, "_sin": np.sin, "_cos": np.cos, "_max": np.maximum, "_min": np.minimum, "_f": np.float64}
_FAST_CACHE: dict[tuple, Callable] = {}
_FAST_CACHE_LIMIT = 50_000


def _fast_source(nodes) -> str:
    def emit(i: int) -> tuple[str, int]:
        node = nodes[i]
        if type(node) is float:
            return f"_f({node!r})", i + 1
        if node in _TERMINAL_SET:
            return node, i + 1
        if node in _UNARY:
            arg, i = emit(i + 1)
            return f"_{node}({arg})", i
        a, j = emit(i + 1)
        b, j = emit(j)
        if node in ("+", "-", "*"):
            return f"({a} {node} {b})", j
        name = {"/": "_div", "max": "_max", "min": "_min"}[node]
        return f"{name}({a}, {b})", j

    expr, _ = emit(0)
    used = sorted({n for n in nodes if type(n) is str and n in _TERMINAL_SET})
    fetch = "".join(f"    {t} = T({t!r})\n" for t in used)
    return f"def _rule(T):\n{fetch}    return {expr}\n"


def compile_nodes(nodes) -> Callable:
    """Compile a prefix sequence into ``f(lookup)`` with no non-finite guarding.

    Callers run it under ``np.errstate(over/invalid/divide='raise')`` and fall
    back to :func:`evaluate_nodes` when a FloatingPointError occurs.
    """
    fn = _FAST_CACHE.get(nodes)
    if fn is None:
        ns = dict(_FAST_NS)
        exec(_fast_source(nodes), ns)
        fn = ns["_rule"]
        if len(_FAST_CACHE) >= _FAST_CACHE_LIMIT:
            _FAST_CACHE.clear()
        _FAST_CACHE[nodes] = fn
    return fn


_RAISE = dict(over="raise", invalid="raise", divide="raise", under="ignore")


def evaluate_rule(nodes, lookup: Callable[[str], object]):
    """Same result as :func:`evaluate_nodes`, via the compiled fast path when it is exact."""
    with np.errstate(**_RAISE):
        return _evaluate_raising(compile_nodes(nodes), nodes, lookup)


def _evaluate_raising(fn, nodes, lookup):
    # caller has set numpy to raise on floating point errors
    try:
        return fn(lookup)
    except FloatingPointError:
        return evaluate_nodes(nodes, lookup)


class Priority(Protocol):
    def scores(self, ctx: "DecodeContext") -> np.ndarray: ...


class InstanceArrays:
    """Per-instance constants the decoder needs; built once and cached."""

    def __init__(self, inst: Instance):
        self.ez = inst.ez
        self.eligible = inst.eligible
        self.team = inst.team_matrix
        self.demand = inst.demand_vector
        self.relations = np.asarray(inst.relations, dtype=float)
        self.sc = np.array([len(c.skills) for c in inst.candidates], dtype=float)
        self.scn = self.team.sum(axis=1).astype(float)
        self.ans = float(self.sc.mean())
        self.nsr = float(len(inst.team_skills))
        self.npt = float(inst.n_positions)
        self.wmax = inst.weight_matrix.max(axis=1)


def instance_arrays(inst: Instance) -> InstanceArrays:
    arrays = inst.__dict__.get("_decode_arrays")
    if arrays is None:
        arrays = InstanceArrays(inst)
        inst.__dict__["_decode_arrays"] = arrays
    return arrays


class DecodeContext:
    """Mutable state of one decode; only ``seat`` and ``prune`` change it.

    Candidate terminals are full-length arrays indexed by candidate id; entries
    of candidates no longer remaining are stale and must be masked by callers.
    """

    def __init__(self, inst: Instance):
        self.inst = inst
        self.arr = arr = instance_arrays(inst)
        n_c, n_p = inst.n_candidates, inst.n_positions
        self.remaining = np.ones(n_c, dtype=bool)
        self.open = np.ones(n_p, dtype=bool)
        self.holders: list[Optional[int]] = [None] * n_p
        self.members: list[int] = []
        self.scw = np.zeros(n_c)
        self.smp = 0.0
        self.headcount = np.zeros(len(inst.team_skills), dtype=int)
        self.supply = arr.team.sum(axis=0).astype(int)
        self.n_open = n_p
        self.n_remaining = n_c
        self.n_covering = int(np.count_nonzero(arr.scn))
        self._rem = None
        self._cache: dict[str, object] = {}
        # best open position by match for every candidate, kept up to date on seating
        self._best_pos = np.argmax(arr.ez, axis=1)
        self._best_val = arr.ez[np.arange(n_c), self._best_pos]
        self._static = {
            "NPT": np.float64(arr.npt),
            "ANS": np.float64(arr.ans),
            "NSR": np.float64(arr.nsr),
            "SC": arr.sc,
            "SCN": arr.scn,
        }
        self._dynamic = {
            "RNP": lambda: np.float64(self.n_open),
            "NCP": lambda: np.float64(self.n_covering),
            "NCR": self._ncr,
            "SCW": lambda: self.scw,
            "SMP": lambda: np.float64(self.smp),
            "WEC": lambda: arr.wmax[self._best_pos],
        }

    def remaining_ids(self) -> np.ndarray:
        if self._rem is None:
            self._rem = np.flatnonzero(self.remaining)
        return self._rem

    def open_ids(self) -> np.ndarray:
        return np.flatnonzero(self.open)

    def prune(self, c: int):
        self.remaining[c] = False
        self.n_remaining -= 1
        if self.arr.scn[c]:
            self.n_covering -= 1
        self.supply -= self.arr.team[c]
        self._rem = None
        self._cache.clear()

    def seat(self, c: int, j: int):
        if not self.remaining[c] or not self.open[j]:
            raise ValueError(f"cannot seat candidate {c} at position {j}")
        ez = self.arr.ez
        self.holders[j] = c
        self.members.append(c)
        self.open[j] = False
        self.n_open -= 1
        if self.n_open:
            stale = np.flatnonzero(self._best_pos == j)
            if len(stale):
                opn = self.open_ids()
                sub = ez[stale][:, opn]
                k = sub.argmax(axis=1)
                self._best_pos[stale] = opn[k]
                self._best_val[stale] = sub[np.arange(len(stale)), k]
        self.scw = self.scw + self.arr.relations[c]  # symmetric, row is contiguous
        self.smp += float(ez[c, j])
        self.headcount += self.arr.team[c]
        self.prune(c)

    def best_position(self, c: int) -> Optional[int]:
        """Open position with the highest match among those ``c`` qualifies for."""
        mask = self.open & self.arr.eligible[c]
        if not mask.any():
            return None
        return int(np.where(mask, self.arr.ez[c], -np.inf).argmax())

    def best_open_match(self) -> tuple[np.ndarray, np.ndarray]:
        """For every candidate: best open position (by match) and its match score."""
        return self._best_pos, self._best_val

    def _ncr(self):
        under = self.headcount < self.arr.demand
        return np.float64(self.supply[under].min()) if under.any() else _ZERO

    def terminal(self, name: str):
        """A step constant, or a per-candidate array indexed by candidate id."""
        val = self._static.get(name)
        if val is not None:
            return val
        val = self._cache.get(name)
        if val is None:
            try:
                val = self._dynamic[name]()
            except KeyError:
                raise KeyError(f"unknown terminal {name!r}") from None
            self._cache[name] = val
        return val

    def pick(self, scores) -> int:
        """Remaining candidate with the highest score; lowest id wins ties."""
        if np.ndim(scores) == 0:
            return int(self.remaining.argmax())
        return int(np.where(self.remaining, scores, -np.inf).argmax())

    def requirements_met(self) -> bool:
        return (
            self.n_open == 0
            and bool(np.all(self.headcount >= self.arr.demand))
            and bool(np.all(self.headcount > 0))
        )


# terminals whose value can change when a candidate is pruned / seated
PRUNE_SENSITIVE = frozenset({"NCP", "NCR"})
SEAT_SENSITIVE = frozenset({"RNP", "SCW", "SMP", "WEC"}) | PRUNE_SENSITIVE


class TreePriority:
    def __init__(self, tree: RuleTree):
        self.tree = tree
        self.fn = compile_nodes(tree.nodes)
        used = tree.terminals_used()
        self.prune_sensitive = bool(used & PRUNE_SENSITIVE)
        self.seat_sensitive = bool(used & SEAT_SENSITIVE)

    def scores(self, ctx: DecodeContext):
        """Scalar or per-candidate array, indexed by candidate id."""
        if np.geterr()["over"] == "raise":
            return _evaluate_raising(self.fn, self.tree.nodes, ctx.terminal)
        return evaluate_rule(self.tree.nodes, ctx.terminal)


class StaticPriority:
    """Fixed per-candidate scores (e.g. a construction heuristic's ordering key)."""

    prune_sensitive = False
    seat_sensitive = False

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def scores(self, ctx: DecodeContext) -> np.ndarray:
        return self.values


class ReferencePriority:
    """Suitability of a candidate: its best match over the open positions."""

    prune_sensitive = False
    seat_sensitive = True

    def scores(self, ctx: DecodeContext) -> np.ndarray:
        return ctx.best_open_match()[1]


def as_priority(rule) -> Priority:
    if isinstance(rule, RuleTree):
        return TreePriority(rule)
    if hasattr(rule, "scores"):
        return rule
    raise TypeError(f"not a priority rule: {rule!r}")


def eval_terminal(name: str, ctx: DecodeContext, candidate: int) -> float:
    val = ctx.terminal(name)
    return float(val) if np.ndim(val) == 0 else float(val[candidate])


def eval_tree(tree: RuleTree, ctx: DecodeContext, candidate: int) -> float:
    val = evaluate_rule(tree.nodes, ctx.terminal)
    return float(val) if np.ndim(val) == 0 else float(val[candidate])


StepObserver = Callable[[DecodeContext, np.ndarray, np.ndarray, int], None]


def decode(rule, inst: Instance, observer: Optional[StepObserver] = None) -> Assignment:
    """Build a team with ``rule``.

    ``observer(ctx, remaining_ids, scores, chosen)`` is called before each
    seating step, with ``scores`` aligned to ``remaining_ids``. The result is
    marked ``failed`` when positions stay empty or skill demand is unmet.
    """
    prio = as_priority(rule)
    on_prune = getattr(prio, "prune_sensitive", True)
    on_seat = getattr(prio, "seat_sensitive", True)
    ctx = DecodeContext(inst)
    with np.errstate(**_RAISE):
        _decode_loop(prio, ctx, on_prune, on_seat, observer)
    return Assignment.from_holders(ctx.holders, failed=not ctx.requirements_met())


def _decode_loop(prio, ctx: DecodeContext, on_prune: bool, on_seat: bool, observer) -> None:
    scores = None
    while ctx.n_open and ctx.n_remaining:
        # scores of the remaining candidates only change with the terminals the rule reads
        if scores is None:
            scores = prio.scores(ctx)
        c = ctx.pick(scores)
        j = ctx.best_position(c)
        if j is None:
            ctx.prune(c)
            if on_prune:
                scores = None
            continue
        if observer is not None:
            rem = ctx.remaining_ids()
            aligned = np.broadcast_to(scores, ctx.remaining.shape)[rem]
            observer(ctx, rem, aligned, c)
        ctx.seat(c, j)
        if on_seat:
            scores = None


def reference_ranks(ctx: DecodeContext) -> np.ndarray:
    """1-based reference rank of every remaining candidate (aligned with remaining_ids)."""
    scores = ctx.best_open_match()[1][ctx.remaining_ids()]
    order = np.argsort(-scores, kind="stable")
    ranks = np.empty(len(order), dtype=int)
    ranks[order] = np.arange(1, len(order) + 1)
    return ranks
