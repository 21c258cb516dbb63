"""Populations, tournament selection, variation and the four search modes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from rlgp.gp.tree import MAX_DEPTH, RuleTree, crossover, mutate, ramped_half_and_half
from rlgp.rl import Mode


@dataclass
class Individual:
    tree: RuleTree
    fitness: Optional[float] = None
    real: bool = False  # fitness came from the real evaluator


@dataclass
class Population:
    individuals: list[Individual]
    mode: Mode = Mode.P1
    global_best: Optional[Individual] = None
    prev_gen_best: Optional[Individual] = None

    def __len__(self) -> int:
        return len(self.individuals)

    def best(self) -> Individual:
        return best_of(self.individuals)


@dataclass
class VariationConfig:
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    tournament_size: int = 3
    max_depth: int = MAX_DEPTH


@dataclass
class VariationStats:
    crossovers: int = 0
    mutations: int = 0
    copies: int = 0
    counts: dict = field(default_factory=dict)


def best_of(inds: list[Individual]) -> Individual:
    """Highest fitness; the earliest individual wins ties."""
    best = inds[0]
    for ind in inds[1:]:
        if ind.fitness > best.fitness:
            best = ind
    return best


def init_population(n: int, rng: np.random.Generator) -> Population:
    if n < 2:
        raise ValueError("population size must be at least 2")
    return Population([Individual(t) for t in ramped_half_and_half(n, rng)])


def select(inds: list[Individual], rng: np.random.Generator, size: int = 3) -> Individual:
    """Tournament with replacement."""
    draws = rng.integers(len(inds), size=size)
    return best_of([inds[int(i)] for i in draws])


def compose_population(mode: Mode, base: Population, rng: np.random.Generator, generation: int = 1):
    """Parent set for one generation and the mode actually used.

    Modes that need elites fall back to P1 when none are known yet; P3 and
    P4 also fall back on the first generation.
    """
    gb, pb = base.global_best, base.prev_gen_best
    if mode == Mode.P2 and gb is None:
        mode = Mode.P1
    if mode in (Mode.P3, Mode.P4) and (generation == 0 or gb is None or pb is None):
        mode = Mode.P1

    if mode == Mode.P1:
        parents = list(base.individuals)
    elif mode == Mode.P2:
        parents = list(base.individuals)
        parents[int(rng.integers(len(parents)))] = gb
    elif mode == Mode.P3:
        parents = [gb, pb]
    else:
        parents = list(base.individuals) + [gb, pb]
    return parents, mode


def evolve_generation(
    parents: list[Individual],
    cfg: VariationConfig,
    rng: np.random.Generator,
    n_offspring: Optional[int] = None,
    stats: Optional[VariationStats] = None,
) -> list[RuleTree]:
    """Offspring trees: crossover with probability ``crossover_rate``, else mutation."""
    n = len(parents) if n_offspring is None else n_offspring
    out: list[RuleTree] = []
    while len(out) < n:
        p1 = select(parents, rng, cfg.tournament_size)
        u = rng.random()
        if u < cfg.crossover_rate:
            p2 = select(parents, rng, cfg.tournament_size)
            out.extend(crossover(p1.tree, p2.tree, rng, cfg.max_depth))
            if stats is not None:
                stats.crossovers += 1
        elif u < cfg.crossover_rate + cfg.mutation_rate:
            out.append(mutate(p1.tree, rng, cfg.max_depth))
            if stats is not None:
                stats.mutations += 1
        else:
            out.append(p1.tree)
            if stats is not None:
                stats.copies += 1
    return out[:n]


def next_base(mode: Mode, base: list[Individual], offspring: list[Individual]) -> list[Individual]:
    """Main population carried into the next generation (always size N)."""
    n = len(base)
    if mode in (Mode.P1, Mode.P2):
        return offspring
    if mode == Mode.P4:
        order = sorted(range(len(offspring)), key=lambda i: -offspring[i].fitness)
        keep = sorted(order[:n])
        return [offspring[i] for i in keep]
    # P3: the two offspring replace the two weakest members
    worst = sorted(range(n), key=lambda i: (base[i].fitness, -i))[: len(offspring)]
    out = list(base)
    for slot, child in zip(sorted(worst), offspring):
        out[slot] = child
    return out
