"""The learning loop: RL-chosen population modes, GP variation, KNN surrogate."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from rlgp.evaluator import result_to_dict, total_efficiency
from rlgp.gp.decode import decode
from rlgp.gp.population import (
    Individual,
    Population,
    VariationConfig,
    best_of,
    compose_population,
    evolve_generation,
    init_population,
    next_base,
)
from rlgp.gp.tree import RuleTree, to_text
from rlgp.problem import Instance
from rlgp.rl import Mode, RLConfig, State, epsilon_greedy, new_q_table, observe_state, q_update, reward
from rlgp.surrogate import SurrogateModel, decision_vector, knn_predict_many, knn_update

log = logging.getLogger(__name__)

MODE_NAMES = {"auto": None, "p1": Mode.P1, "p2": Mode.P2, "p3": Mode.P3, "p4": Mode.P4}


@dataclass
class TrainConfig:
    pop_size: int = 100
    generations: int = 100
    variation: VariationConfig = field(default_factory=VariationConfig)
    rl: RLConfig = field(default_factory=RLConfig)
    k: int = 5
    refresh: int = 5
    surrogate: bool = True
    mode: str = "auto"  # auto or a locked mode p1..p4
    replay_vectors: bool = False
    max_training: Optional[int] = None
    novel_omega: bool = True

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.mode not in MODE_NAMES:
            raise ValueError(f"mode must be one of {sorted(MODE_NAMES)}")
        if self.surrogate and self.k > self.pop_size:
            raise ValueError("k cannot exceed the initial population (the surrogate's first training set)")

    @classmethod
    def bgp(cls, **kw) -> "TrainConfig":
        """Plain GP baseline: mode locked to P1, real evaluation throughout."""
        return cls(surrogate=False, mode="p1", **kw)

    @property
    def algorithm(self) -> str:
        if self.mode == "p1" and not self.surrogate:
            return "BGP"
        return "RL-GP" if self.mode == "auto" else f"GP-{self.mode.upper()}"


@dataclass
class TrainResult:
    algorithm: str
    instance: str
    seed: int
    best_rule: str
    best_te: float
    assignment: dict
    trace: list[dict]
    q_table: list[list[float]]
    real_evaluations: int
    refreshes: int
    config: dict
    timing: dict = field(default_factory=dict)  # wall-clock; not part of to_dict()

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("timing")
        return d


class RealEvaluator:
    """Decode + evaluate, memoised per tree."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.cache: dict[tuple, float] = {}
        self.calls = 0

    def __call__(self, tree: RuleTree) -> float:
        te = self.cache.get(tree.nodes)
        if te is None:
            self.calls += 1
            te = total_efficiency(self.inst, decode(tree, self.inst)).total_efficiency
            self.cache[tree.nodes] = te
        return te


class PhenotypeCache:
    def __init__(self, inst: Instance, replay: bool):
        self.inst = inst
        self.replay = replay
        self.cache: dict[tuple, np.ndarray] = {}

    def __call__(self, tree: RuleTree) -> np.ndarray:
        v = self.cache.get(tree.nodes)
        if v is None:
            v = decision_vector(tree, self.inst, replay=self.replay)
            self.cache[tree.nodes] = v
        return v


def run_training(inst: Instance, config: Optional[TrainConfig] = None, seed: int = 0) -> TrainResult:
    cfg = config or TrainConfig()
    t_start = time.perf_counter()
    rng = np.random.default_rng(seed)
    real = RealEvaluator(inst)
    pheno = PhenotypeCache(inst, cfg.replay_vectors) if cfg.surrogate else None
    locked = MODE_NAMES[cfg.mode]

    pop = init_population(cfg.pop_size, rng)
    for ind in pop.individuals:
        ind.fitness = real(ind.tree)
        ind.real = True

    model = None
    if cfg.surrogate:
        model = SurrogateModel(k=cfg.k, refresh_interval=cfg.refresh, max_size=cfg.max_training)
        knn_update(model, [(pheno(ind.tree), ind.fitness) for ind in pop.individuals])
        known = {pheno(ind.tree).tobytes() for ind in pop.individuals}

    first = best_of(pop.individuals)
    real_best = Individual(first.tree, first.fitness, True)
    pop.global_best = real_best
    pop.prev_gen_best = first

    q = new_q_table()
    state = State.NOT_IMPROVED
    f_prev = first.fitness
    since_refresh = 0
    refreshes = 0
    trace: list[dict] = []
    gen_times: list[float] = []

    def confirm(ind: Individual) -> float:
        nonlocal real_best
        te = real(ind.tree)
        if te > real_best.fitness:
            real_best = Individual(ind.tree, te, True)
        return te

    def refresh(pending: list[Individual]):
        nonlocal refreshes
        evaluated = []
        for ind in pending:
            te = confirm(ind)
            evaluated.append((pheno(ind.tree), te))
        knn_update(model, evaluated)
        refreshes += 1
        gb = pop.global_best
        if not gb.real:
            te = confirm(gb)
            if te < gb.fitness:
                pop.global_best = real_best
            else:
                pop.global_best = Individual(gb.tree, te, True)
        if real_best.fitness > pop.global_best.fitness:
            pop.global_best = real_best

    for t in range(cfg.generations):
        t_gen = time.perf_counter()
        chosen = locked if locked is not None else epsilon_greedy(state, q, cfg.rl, rng)
        parents, used = compose_population(chosen, pop, rng, generation=t)
        pop.mode = used
        trees = evolve_generation(parents, cfg.variation, rng)

        if cfg.surrogate:
            vectors = np.array([pheno(tr) for tr in trees])
            est = knn_predict_many(model, vectors)
            offspring = [Individual(tr, float(f), False) for tr, f in zip(trees, est)]
        else:
            offspring = [Individual(tr, real(tr), True) for tr in trees]

        local = best_of(offspring)
        if cfg.surrogate:
            omega = _pick_omega(offspring, vectors, known, local) if cfg.novel_omega else local
            model.pending.append(omega)
            known.add(pheno(omega.tree).tobytes())
        else:
            confirm(local)

        r = reward(local.fitness, f_prev)
        s_next = observe_state(f_prev, local.fitness)
        # the action credited is the one requested, so fallbacks still teach the table
        q_update(q, int(state), int(chosen), r, int(s_next), cfg.rl)
        s_prev, state, f_prev = state, s_next, local.fitness

        if local.fitness >= pop.global_best.fitness:
            pop.global_best = local

        refreshed = False
        if cfg.surrogate and since_refresh % cfg.refresh == 0:
            refresh(list(model.pending))
            since_refresh = 0
            refreshed = True
        since_refresh += 1

        pop.individuals = next_base(used, pop.individuals, offspring)
        pop.prev_gen_best = local
        gen_times.append((time.perf_counter() - t_gen) * 1000.0)
        trace.append(
            {
                "gen": t,
                "mode": chosen.name,
                "mode_used": used.name,
                "state": s_prev.name,
                "next_state": s_next.name,
                "reward": r,
                "gen_best": local.fitness,
                "global_best": pop.global_best.fitness,
                "real_best": real_best.fitness if (refreshed or not cfg.surrogate) else None,
            }
        )

    if cfg.surrogate and model.pending:
        for ind in model.pending:
            confirm(ind)
        model.pending.clear()
    if not pop.global_best.real:
        confirm(pop.global_best)

    best_tree = real_best.tree
    asg = decode(best_tree, inst)
    res = total_efficiency(inst, asg)
    assert res.total_efficiency == real_best.fitness
    elapsed = (time.perf_counter() - t_start) * 1000.0
    log.info("%s on %s seed %d: TE %.4f (%d real evaluations, %.0f ms)",
             cfg.algorithm, inst.name, seed, res.total_efficiency, real.calls, elapsed)
    return TrainResult(
        algorithm=cfg.algorithm,
        instance=inst.name,
        seed=int(seed),
        best_rule=to_text(best_tree),
        best_te=res.total_efficiency,
        assignment=result_to_dict(inst, asg, res),
        trace=trace,
        q_table=q.tolist(),
        real_evaluations=real.calls,
        refreshes=refreshes,
        config=_config_echo(cfg),
        timing={"total_ms": elapsed, "generation_ms": gen_times},
    )


def _pick_omega(offspring: list[Individual], vectors: np.ndarray, known: set, fallback: Individual) -> Individual:
    """Best estimated offspring whose decision vector is not in the training set yet."""
    best = None
    for ind, v in zip(offspring, vectors):
        if v.tobytes() not in known and (best is None or ind.fitness > best.fitness):
            best = ind
    return fallback if best is None else best


def _config_echo(cfg: TrainConfig) -> dict:
    d = asdict(cfg)
    d["algorithm"] = cfg.algorithm
    return d
