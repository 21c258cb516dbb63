"""Comparison solvers.

CH1 and CH2 are construction heuristics that run through the same seating
procedure as learned rules, so only the candidate ordering differs. The GA and
VNS here are simplified stand-ins for published search methods and are
labelled "GA-baseline" and "VNS-baseline" wherever results are written.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from rlgp.evaluator import Assignment, evaluate_holders, total_efficiency
from rlgp.gp.decode import ReferencePriority, StaticPriority, decode, instance_arrays
from rlgp.problem import Instance

GA_NAME = "GA-baseline"
VNS_NAME = "VNS-baseline"


@dataclass
class BaselineConfig:
    # GA
    pop_size: int = 100
    generations: int = 100
    crossover_rate: float = 0.9
    mutation_rate: float = 0.2
    tournament_size: int = 3
    elites: int = 1
    # VNS
    neighborhoods: tuple[str, ...] = ("N1", "N2", "N3")
    max_iterations: int = 50  # shake rounds
    shake_strength: int = 2
    n3_samples: int = 2000  # random double replacements tried per N3 pass
    max_evaluations: int = 10_000  # shared budget cap, pop_size * generations by default

    def __post_init__(self):
        for name in ("pop_size", "tournament_size", "max_iterations", "shake_strength", "n3_samples", "max_evaluations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.generations < 0 or self.elites < 0 or self.elites >= self.pop_size:
            raise ValueError("need generations >= 0 and 0 <= elites < pop_size")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        unknown = set(self.neighborhoods) - {"N1", "N2", "N3"}
        if unknown or not self.neighborhoods:
            raise ValueError(f"neighborhoods must be a non-empty subset of N1, N2, N3 (got {self.neighborhoods})")


def ch1_solve(inst: Instance) -> Assignment:
    """Candidates ranked by how many team skills they hold."""
    return decode(StaticPriority(instance_arrays(inst).scn), inst)


def ch2_solve(inst: Instance) -> Assignment:
    """Candidates ranked by their best match over the open positions."""
    return decode(ReferencePriority(), inst)


def shortfall(inst: Instance, holders: tuple) -> int:
    """Unqualified seats plus missing skill headcount; 0 for a feasible plan."""
    h = np.asarray(holders, dtype=int)
    unqualified = int(np.count_nonzero(~inst.eligible[h, np.arange(len(h))]))
    headcount = inst.team_matrix[h].sum(axis=0)
    need = np.maximum(inst.demand_vector, 1)
    return unqualified + int(np.maximum(need - headcount, 0).sum())


class _Scorer:
    """Memoised objective of holder tuples with an evaluation counter.

    With ``guided`` the score is ``(TE, -shortfall)`` so that a search stuck
    among infeasible plans still has a gradient towards feasibility.
    """

    def __init__(self, inst: Instance, guided: bool = False):
        self.inst = inst
        self.guided = guided
        self.cache: dict[tuple, object] = {}
        self.calls = 0

    def __call__(self, holders: tuple):
        val = self.cache.get(holders)
        if val is None:
            self.calls += 1
            val = evaluate_holders(self.inst, holders)
            if self.guided:
                val = (val, -shortfall(self.inst, holders))
            self.cache[holders] = val
        return val


def _finish(inst: Instance, holders: tuple) -> tuple[Assignment, float]:
    asg = Assignment.from_holders(holders)
    return asg, total_efficiency(inst, asg).total_efficiency


# --- GA -------------------------------------------------------------------


def _random_chromosome(inst: Instance, rng: np.random.Generator) -> tuple:
    """Positions in random order each take a random unused eligible candidate."""
    n_c = inst.n_candidates
    used = np.zeros(n_c, dtype=bool)
    genes = [0] * inst.n_positions
    for j in rng.permutation(inst.n_positions):
        pool = np.flatnonzero(inst.eligible[:, j] & ~used)
        if not len(pool):
            pool = np.flatnonzero(~used)
        c = int(pool[rng.integers(len(pool))])
        genes[j] = c
        used[c] = True
    return tuple(genes)


def _best_unused(inst: Instance, j: int, used: np.ndarray) -> int:
    """Unused candidate with the highest match at ``j``; eligible ones first, lowest id on ties."""
    for mask in (inst.eligible[:, j] & ~used, ~used):
        pool = np.flatnonzero(mask)
        if len(pool):
            return int(pool[np.argmax(inst.ez[pool, j])])
    raise ValueError("no unused candidate left")


def _crossover(inst: Instance, a: tuple, b: tuple, rng: np.random.Generator) -> tuple:
    """Position-wise uniform crossover; repeated candidates are repaired greedily."""
    take_a = rng.random(len(a)) < 0.5
    child = [x if t else y for x, y, t in zip(a, b, take_a)]
    used = np.zeros(inst.n_candidates, dtype=bool)
    dupes = []
    for j, c in enumerate(child):
        if used[c]:
            dupes.append(j)
        used[c] = True
    for j in dupes:
        c = _best_unused(inst, j, used)
        child[j] = c
        used[c] = True
    return tuple(child)


def _mutate(inst: Instance, genes: tuple, rng: np.random.Generator) -> tuple:
    out = list(genes)
    n_p = len(out)
    if n_p >= 2 and rng.random() < 0.5:
        i, j = rng.choice(n_p, size=2, replace=False)
        out[i], out[j] = out[j], out[i]
    else:
        unused = np.setdiff1d(np.arange(inst.n_candidates), out)
        if len(unused):
            j = int(rng.integers(n_p))
            out[j] = int(unused[rng.integers(len(unused))])
    return tuple(out)


def ga_solve(
    inst: Instance,
    cfg: Optional[BaselineConfig] = None,
    seed: int = 0,
    trace: Optional[list[float]] = None,
) -> tuple[Assignment, float]:
    """Direct-encoding GA (chromosome = candidate per position) with elitism.

    ``trace``, when given, receives the incumbent TE after every generation.
    """
    cfg = cfg or BaselineConfig()
    rng = np.random.default_rng(seed)
    score = _Scorer(inst)
    pop = [_random_chromosome(inst, rng) for _ in range(cfg.pop_size)]
    fit = [score(g) for g in pop]

    def tournament() -> tuple:
        idx = rng.integers(len(pop), size=cfg.tournament_size)
        return pop[max(idx, key=lambda i: (fit[i], -i))]

    for _ in range(cfg.generations):
        if score.calls >= cfg.max_evaluations:
            break
        order = sorted(range(len(pop)), key=lambda i: (-fit[i], i))
        children = [pop[i] for i in order[: cfg.elites]]
        while len(children) < cfg.pop_size:
            child = tournament()
            if rng.random() < cfg.crossover_rate:
                child = _crossover(inst, child, tournament(), rng)
            if rng.random() < cfg.mutation_rate:
                child = _mutate(inst, child, rng)
            children.append(child)
        pop = children
        fit = [score(g) for g in pop]
        if trace is not None:
            trace.append(max(fit))

    best = max(range(len(pop)), key=lambda i: (fit[i], -i))
    return _finish(inst, pop[best])


# --- VNS ------------------------------------------------------------------


def _complete(inst: Instance, holders: list) -> tuple:
    """Fill empty seats with the best unused candidates."""
    used = np.zeros(inst.n_candidates, dtype=bool)
    used[[c for c in holders if c is not None]] = True
    out = list(holders)
    for j, c in enumerate(out):
        if c is None:
            c = _best_unused(inst, j, used)
            out[j] = c
            used[c] = True
    return tuple(out)


def _neighbors(inst: Instance, x: tuple, kind: str, rng: np.random.Generator, n3_samples: int):
    """Neighbours of ``x`` in a seeded random order."""
    n_p = len(x)
    el = inst.eligible
    unseated = np.setdiff1d(np.arange(inst.n_candidates), x)
    if kind == "N1":
        pairs = [(i, j) for i in range(n_p) for j in range(i + 1, n_p) if el[x[i], j] and el[x[j], i]]
        for k in rng.permutation(len(pairs)):
            i, j = pairs[k]
            y = list(x)
            y[i], y[j] = y[j], y[i]
            yield tuple(y)
    elif kind == "N2":
        moves = [(j, int(c)) for j in range(n_p) for c in unseated if el[c, j]]
        for k in rng.permutation(len(moves)):
            j, c = moves[k]
            y = list(x)
            y[j] = c
            yield tuple(y)
    else:
        if n_p < 2 or len(unseated) < 2:
            return
        size = n_p * (n_p - 1) * len(unseated) * (len(unseated) - 1)
        for _ in range(min(n3_samples, size)):
            i, j = rng.choice(n_p, size=2, replace=False)
            a, b = rng.choice(unseated, size=2, replace=False)
            if el[a, i] and el[b, j]:
                y = list(x)
                y[i], y[j] = int(a), int(b)
                yield tuple(y)


def _shake(inst: Instance, x: tuple, strength: int, rng: np.random.Generator) -> tuple:
    y = x
    for _ in range(strength):
        y = _mutate(inst, y, rng)
    return y


def vns_solve(
    inst: Instance,
    cfg: Optional[BaselineConfig] = None,
    seed: int = 0,
    trace: Optional[list[float]] = None,
) -> tuple[Assignment, float]:
    """Variable neighbourhood search from the CH2 plan; first improvement, shake on stagnation."""
    cfg = cfg or BaselineConfig()
    rng = np.random.default_rng(seed)
    score = _Scorer(inst, guided=True)
    start = ch2_solve(inst)
    ch2_te = total_efficiency(inst, start).total_efficiency
    x = _complete(inst, start.holders(inst.n_positions))
    fx = score(x)

    def descend(y: tuple, fy) -> tuple:
        k = 0
        while k < len(cfg.neighborhoods) and score.calls < cfg.max_evaluations:
            for z in _neighbors(inst, y, cfg.neighborhoods[k], rng, cfg.n3_samples):
                fz = score(z)
                if fz > fy:
                    y, fy = z, fz
                    k = 0
                    break
                if score.calls >= cfg.max_evaluations:
                    break
            else:
                k += 1
        return y, fy

    x, fx = descend(x, fx)
    for _ in range(cfg.max_iterations):
        if trace is not None:
            trace.append(fx[0])
        if score.calls >= cfg.max_evaluations:
            break
        y = _shake(inst, x, cfg.shake_strength, rng)
        y, fy = descend(y, score(y))
        if fy > fx:
            x, fx = y, fy

    asg, te = _finish(inst, x)
    if te < ch2_te:
        # CH2 itself was feasible and nothing beat it
        return start, ch2_te
    return asg, te
