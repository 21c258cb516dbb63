"""KNN fitness surrogate over phenotypic decision vectors.

A rule's decision vector has one entry per seating step: the reference-rule
rank (1 = best match) of the candidate the rule would pick. By default the
steps are the decision situations visited by the reference rule's own decode,
recorded once per instance, so a rule is characterised with a single
vectorised evaluation instead of a full decode. ``replay=True`` instead walks
the rule's own decode.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from rlgp.gp.decode import (
    DecodeContext,
    ReferencePriority,
    decode,
    evaluate_rule,
    instance_arrays,
    reference_ranks,
)
from rlgp.gp.tree import RuleTree
from rlgp.problem import Instance


class InsufficientTraining(RuntimeError):
    """Fewer training points than neighbours requested."""


def reference_rank(inst: Instance, ctx: DecodeContext) -> dict[int, int]:
    """Reference rank (1-based) of each remaining candidate."""
    return dict(zip(ctx.remaining_ids().tolist(), reference_ranks(ctx).tolist()))


class DecisionSituations:
    """Snapshots of the reference decode, stacked as (steps, candidates) arrays."""

    STEP_TERMINALS = ("RNP", "NCP", "NCR", "SMP")
    CAND_TERMINALS = ("SCW", "WEC")

    def __init__(self, inst: Instance, driver=None):
        arr = instance_arrays(inst)
        n_c = inst.n_candidates
        masks, ranks = [], []
        rows = {name: [] for name in self.CAND_TERMINALS}
        steps = {name: [] for name in self.STEP_TERMINALS}

        def record(ctx, rem, scores, chosen):
            m = np.zeros(n_c, dtype=bool)
            m[rem] = True
            masks.append(m)
            r = np.full(n_c, n_c, dtype=int)
            r[rem] = reference_ranks(ctx)
            ranks.append(r)
            for name in self.CAND_TERMINALS:
                rows[name].append(np.array(ctx.terminal(name), dtype=float))
            for name in self.STEP_TERMINALS:
                steps[name].append(float(ctx.terminal(name)))

        decode(ReferencePriority() if driver is None else driver, inst, observer=record)
        self.n_positions = inst.n_positions
        self.n_candidates = n_c
        self.n_steps = len(masks)
        self.mask = np.array(masks, dtype=bool).reshape(self.n_steps, n_c)
        self.ranks = np.array(ranks, dtype=int).reshape(self.n_steps, n_c)
        self.values: dict[str, object] = {
            "NPT": np.float64(arr.npt),
            "ANS": np.float64(arr.ans),
            "NSR": np.float64(arr.nsr),
            "SC": arr.sc[None, :],
            "SCN": arr.scn[None, :],
        }
        for name in self.CAND_TERMINALS:
            self.values[name] = np.array(rows[name]).reshape(self.n_steps, n_c)
        for name in self.STEP_TERMINALS:
            self.values[name] = np.array(steps[name]).reshape(self.n_steps, 1)

    def vector(self, tree: RuleTree) -> np.ndarray:
        out = np.full(self.n_positions, self.n_candidates, dtype=float)
        if self.n_steps == 0:
            return out
        pri = evaluate_rule(tree.nodes, self.values.__getitem__)
        pri = np.broadcast_to(pri, self.mask.shape)
        pri = np.where(self.mask, pri, -np.inf)
        picks = np.argmax(pri, axis=1)
        out[: self.n_steps] = self.ranks[np.arange(self.n_steps), picks]
        return out


def situations(inst: Instance) -> DecisionSituations:
    sit = inst.__dict__.get("_decision_situations")
    if sit is None:
        sit = DecisionSituations(inst)
        inst.__dict__["_decision_situations"] = sit
    return sit


def decision_vector(tree, inst: Instance, replay: bool = False) -> np.ndarray:
    """Decision vector of length |POS|; unreached steps hold the worst rank |C|."""
    if not replay:
        return situations(inst).vector(tree)
    entries: list[int] = []

    def record(ctx, rem, scores, chosen):
        ranks = reference_ranks(ctx)
        entries.append(int(ranks[int(np.searchsorted(rem, chosen))]))

    decode(tree, inst, observer=record)
    out = np.full(inst.n_positions, inst.n_candidates, dtype=float)
    out[: len(entries)] = entries
    return out


def phenotype_distance(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"decision vectors differ in length: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


@dataclass
class SurrogateModel:
    k: int = 5
    refresh_interval: int = 5
    max_size: Optional[int] = None  # FIFO cap; None keeps everything
    vectors: list[np.ndarray] = field(default_factory=list)
    fitness: list[float] = field(default_factory=list)
    pending: list = field(default_factory=list)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.refresh_interval < 1:
            raise ValueError("refresh_interval must be >= 1")

    def __len__(self) -> int:
        return len(self.fitness)

    def dump_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            width = len(self.vectors[0]) if self.vectors else 0
            w.writerow([f"d{i}" for i in range(width)] + ["fitness"])
            for v, f in zip(self.vectors, self.fitness):
                w.writerow([int(x) for x in v] + [repr(f)])


def knn_predict(m: SurrogateModel, v) -> float:
    return float(knn_predict_many(m, np.asarray(v, dtype=float)[None, :])[0])


def knn_predict_many(m: SurrogateModel, queries: np.ndarray) -> np.ndarray:
    """Mean fitness of the k nearest training vectors (earliest entry wins distance ties)."""
    if len(m) < m.k:
        raise InsufficientTraining(f"need {m.k} training points, have {len(m)}")
    train = np.asarray(m.vectors, dtype=float)
    fit = np.asarray(m.fitness, dtype=float)
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if q.shape[1] != train.shape[1]:
        raise ValueError("query length differs from training vectors")
    d2 = ((q[:, None, :] - train[None, :, :]) ** 2).sum(axis=-1)
    nearest = np.argsort(d2, axis=1, kind="stable")[:, : m.k]
    return fit[nearest].mean(axis=1)


def knn_update(m: SurrogateModel, evaluated) -> SurrogateModel:
    """Append (vector, real fitness) pairs and clear the pending list."""
    for v, f in evaluated:
        m.vectors.append(np.asarray(v, dtype=float))
        m.fitness.append(float(f))
    if m.max_size is not None and len(m) > m.max_size:
        drop = len(m) - m.max_size
        del m.vectors[:drop]
        del m.fitness[:drop]
    m.pending.clear()
    return m
