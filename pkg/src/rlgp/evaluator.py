"""Team plan evaluation: constraint checks, communication efficiency, total efficiency.

Communication efficiency sums the relation entries over ordered pairs of team
members *including* each member with itself (``r_ii = 1``). With that reading
and a demanded headcount equal to the team size, the pair-sum fraction spans
[-1, 1] and efficiency spans [1, 2].
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from rlgp.problem import Instance

COMM_A = 0.5
COMM_B = 3.0

BRUTE_FORCE_MAX_CANDIDATES = 10
BRUTE_FORCE_MAX_POSITIONS = 4


class OracleRefused(ValueError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True)
class Assignment:
    """Seated (candidate, position) pairs.

    Kept as a pair list rather than a candidate -> position map so that
    malformed plans (a candidate seated twice) can still be represented and
    reported.
    """

    pairs: tuple[tuple[int, int], ...]
    failed: bool = False

    @classmethod
    def from_post_of(cls, post_of: dict[int, int], failed: bool = False) -> "Assignment":
        return cls(tuple(sorted((int(c), int(p)) for c, p in post_of.items())), failed)

    @classmethod
    def from_holders(cls, holders: Iterable[Optional[int]], failed: bool = False) -> "Assignment":
        """Build from a position-ordered list of candidate ids (None = empty seat)."""
        return cls(tuple(sorted((int(c), j) for j, c in enumerate(holders) if c is not None)), failed)

    @property
    def post_of(self) -> dict[int, int]:
        return {c: p for c, p in self.pairs}

    def members(self) -> list[int]:
        return sorted({c for c, _ in self.pairs})

    def holders(self, n_positions: int) -> list[Optional[int]]:
        out: list[Optional[int]] = [None] * n_positions
        for c, p in self.pairs:
            out[p] = c
        return out

    def x_matrix(self, n_candidates: int, n_positions: int) -> np.ndarray:
        x = np.zeros((n_candidates, n_positions), dtype=int)
        for c, p in self.pairs:
            x[c, p] += 1
        return x


@dataclass(frozen=True)
class ConstraintViolation:
    code: str  # C1..C6
    message: str
    indices: tuple = field(default=())


@dataclass(frozen=True)
class EvalResult:
    gamma: Optional[float]
    match_sum: float
    total_efficiency: float
    feasible: bool
    violations: tuple[ConstraintViolation, ...] = ()


def _check_bounds(inst: Instance, asg: Assignment):
    for c, p in asg.pairs:
        if not (0 <= c < inst.n_candidates) or not (0 <= p < inst.n_positions):
            raise IndexError(f"pair ({c}, {p}) outside instance bounds")


def check_feasible(inst: Instance, asg: Assignment) -> list[ConstraintViolation]:
    """One record per breached constraint family; empty iff the plan is feasible."""
    _check_bounds(inst, asg)
    x = asg.x_matrix(inst.n_candidates, inst.n_positions)
    out = []

    per_cand = x.sum(axis=1)
    over = np.flatnonzero(per_cand > 1)
    if len(over):
        out.append(ConstraintViolation("C1", "candidate assigned to more than one position", tuple(map(int, over))))

    per_pos = x.sum(axis=0)
    bad = np.flatnonzero(per_pos != 1)
    if len(bad):
        out.append(ConstraintViolation("C2", "position not held by exactly one candidate", tuple(map(int, bad))))

    selected = per_cand > 0
    headcount = (inst.team_matrix & selected[:, None]).sum(axis=0)
    short = [s for s, have, need in zip(inst.team_skills, headcount, inst.demand_vector) if have < need]
    if short:
        out.append(ConstraintViolation("C3", "too few members for a required skill", tuple(short)))

    missing = [s for s, have in zip(inst.team_skills, headcount) if have == 0]
    if missing:
        out.append(ConstraintViolation("C4", "team skills not covered by the selected members", tuple(missing)))

    unqualified = [(c, p) for c, p in asg.pairs if not inst.eligible[c, p]]
    if unqualified:
        out.append(ConstraintViolation("C5", "member lacks skills required by their position", tuple(unqualified)))

    if np.any(x > 1):
        out.append(ConstraintViolation("C6", "decision variable outside {0, 1}", tuple(map(tuple, np.argwhere(x > 1).tolist()))))
    return out


def is_complete(inst: Instance, asg: Assignment) -> bool:
    seats = [p for _, p in asg.pairs]
    return len(seats) == inst.n_positions and set(seats) == set(range(inst.n_positions))


def communication_efficiency(inst: Instance, asg: Assignment) -> float:
    if not is_complete(inst, asg):
        raise ValueError("communication efficiency needs every position filled exactly once")
    members = np.array(asg.members(), dtype=int)
    pair_sum = float(inst.relations[np.ix_(members, members)].sum())
    m = inst.team_size
    return COMM_A * (COMM_B + pair_sum / (m * m))


def total_efficiency(inst: Instance, asg: Assignment) -> EvalResult:
    """Objective value; infeasible plans score 0."""
    violations = tuple(check_feasible(inst, asg))
    match_sum = float(sum(inst.ez[c, p] for c, p in asg.pairs))
    gamma = communication_efficiency(inst, asg) if is_complete(inst, asg) else None
    feasible = not violations and not asg.failed
    te = match_sum * gamma if feasible else 0.0
    return EvalResult(gamma, match_sum, te, feasible, violations)


def evaluate_holders(inst: Instance, holders) -> float:
    """Fast TE for a position-ordered tuple of distinct candidate ids; 0 if infeasible."""
    holders = np.asarray(holders, dtype=int)
    pos = np.arange(len(holders))
    if not inst.eligible[holders, pos].all():
        return 0.0
    headcount = inst.team_matrix[holders].sum(axis=0)
    if np.any(headcount < inst.demand_vector) or np.any(headcount == 0):
        return 0.0
    m = inst.team_size
    gamma = COMM_A * (COMM_B + inst.relations[np.ix_(holders, holders)].sum() / (m * m))
    return float(inst.ez[holders, pos].sum() * gamma)


def brute_force_optimum(inst: Instance) -> tuple[Optional[Assignment], float]:
    """Exhaustive search over all injections positions -> candidates.

    Returns ``(None, 0.0)`` when no feasible plan exists. Ties go to the
    lexicographically first holder tuple.
    """
    n_c, n_p = inst.n_candidates, inst.n_positions
    if n_c > BRUTE_FORCE_MAX_CANDIDATES or n_p > BRUTE_FORCE_MAX_POSITIONS:
        raise OracleRefused(
            f"brute force limited to {BRUTE_FORCE_MAX_CANDIDATES} candidates and "
            f"{BRUTE_FORCE_MAX_POSITIONS} positions (got {n_c}, {n_p})"
        )
    best, best_te = None, -np.inf
    for holders in itertools.permutations(range(n_c), n_p):
        asg = Assignment.from_holders(holders)
        res = total_efficiency(inst, asg)
        if res.feasible and res.total_efficiency > best_te:
            best, best_te = asg, res.total_efficiency
    if best is None:
        return None, 0.0
    return best, float(best_te)


def result_to_dict(inst: Instance, asg: Optional[Assignment], res: Optional[EvalResult] = None) -> dict:
    """Shared export schema for evaluator, solver and training outputs."""
    if asg is None:
        return {
            "instance": inst.name,
            "post_of": {},
            "gamma": None,
            "match_sum": 0.0,
            "total_efficiency": 0.0,
            "feasible": False,
            "violations": [{"code": "none", "message": "no feasible assignment", "indices": []}],
        }
    res = res or total_efficiency(inst, asg)
    return {
        "instance": inst.name,
        "post_of": {str(c): p for c, p in asg.pairs},
        "gamma": res.gamma,
        "match_sum": res.match_sum,
        "total_efficiency": res.total_efficiency,
        "feasible": res.feasible,
        "violations": [
            {"code": v.code, "message": v.message, "indices": [list(i) if isinstance(i, tuple) else i for i in v.indices]}
            for v in res.violations
        ],
    }
