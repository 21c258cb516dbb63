"""Problem instances: data model, seeded generator, validation and JSON files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from rlgp.fuzzy import match_matrix_from_arrays

SCHEMA_VERSION = 1


class InstanceParseError(ValueError):
    """Raised when an instance document is malformed."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class InstanceValidationError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"instance is invalid: {lines}{more}")


@dataclass(frozen=True)
class Candidate:
    id: int
    skills: tuple[int, ...]


@dataclass(frozen=True)
class Position:
    id: int
    required_skills: tuple[int, ...]
    weights: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Instance:
    """A team formation instance.

    ``relations`` is a (C, C) integer matrix with a unit diagonal and
    ``evaluations`` a (C, P, L, 2) array of (mu, nu) pairs.
    """

    name: str
    seed: Optional[int]
    skills: tuple[int, ...]
    team_skills: tuple[int, ...]
    demand: dict[int, int]
    candidates: tuple[Candidate, ...]
    positions: tuple[Position, ...]
    relations: np.ndarray
    evaluations: np.ndarray

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)

    @property
    def n_positions(self) -> int:
        return len(self.positions)

    @property
    def team_size(self) -> int:
        """Total demanded headcount, the normaliser of communication efficiency."""
        return int(sum(self.demand.values()))

    @cached_property
    def ez(self) -> np.ndarray:
        ez = match_matrix_from_arrays(self.evaluations, self.weight_matrix)
        ez.setflags(write=False)
        return ez

    @cached_property
    def weight_matrix(self) -> np.ndarray:
        return np.array([p.weights for p in self.positions], dtype=float)

    @cached_property
    def skill_matrix(self) -> np.ndarray:
        """Boolean (C, |S|) membership; columns follow ``skills`` order."""
        col = {s: k for k, s in enumerate(self.skills)}
        m = np.zeros((self.n_candidates, len(self.skills)), dtype=bool)
        for c in self.candidates:
            m[c.id, [col[s] for s in c.skills]] = True
        return m

    @cached_property
    def team_matrix(self) -> np.ndarray:
        """Boolean (C, |T|): candidate has team skill t (``team_skills`` order)."""
        cand_sets = [set(c.skills) for c in self.candidates]
        return np.array([[s in cs for s in self.team_skills] for cs in cand_sets], dtype=bool).reshape(
            self.n_candidates, len(self.team_skills)
        )

    @cached_property
    def demand_vector(self) -> np.ndarray:
        return np.array([self.demand[s] for s in self.team_skills], dtype=int)

    @cached_property
    def eligible(self) -> np.ndarray:
        """Boolean (C, P): candidate holds every skill position j requires."""
        cand_sets = [set(c.skills) for c in self.candidates]
        out = np.zeros((self.n_candidates, self.n_positions), dtype=bool)
        for p in self.positions:
            req = set(p.required_skills)
            for i, cs in enumerate(cand_sets):
                out[i, p.id] = req <= cs
        return out

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.seed == other.seed
            and self.skills == other.skills
            and self.team_skills == other.team_skills
            and self.demand == other.demand
            and self.candidates == other.candidates
            and self.positions == other.positions
            and np.array_equal(self.relations, other.relations)
            and np.array_equal(self.evaluations, other.evaluations)
        )

    __hash__ = None


@dataclass
class GeneratorParams:
    num_positions: int = 25
    candidate_ratio: float = 2.0
    skill_pool: Optional[int] = None  # defaults to max(2|T|, |T| + 2)
    sp_ratio: float = 0.2  # |T| / |POS|
    dims: int = 3
    relation_probs: tuple[float, float, float] = (0.2, 0.5, 0.3)  # for -1, 0, 1
    max_skills_per_candidate: int = 3
    max_required_skills: int = 1

    def n_team_skills(self) -> int:
        return max(1, int(round(self.sp_ratio * self.num_positions)))

    def n_skills(self) -> int:
        t = self.n_team_skills()
        return self.skill_pool if self.skill_pool is not None else max(2 * t, t + 2)

    def n_candidates(self) -> int:
        return int(round(self.candidate_ratio * self.num_positions))

    def check(self):
        if self.num_positions < 1:
            raise ValueError("num_positions must be >= 1")
        if self.candidate_ratio <= 1.0 or self.n_candidates() <= self.num_positions:
            raise ValueError("candidate_ratio must give more candidates than positions")
        if self.sp_ratio <= 0:
            raise ValueError("sp_ratio must be positive")
        if self.n_team_skills() > self.num_positions:
            raise ValueError("more team skills than positions: demand cannot fit the team")
        if self.n_skills() < self.n_team_skills():
            raise ValueError("skill_pool smaller than the number of team skills")
        if self.dims < 1:
            raise ValueError("dims must be >= 1")
        probs = np.asarray(self.relation_probs, dtype=float)
        if probs.shape != (3,) or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("relation_probs must be three non-negative numbers summing to 1")
        if self.max_skills_per_candidate < 1 or self.max_required_skills < 1:
            raise ValueError("skill count limits must be >= 1")


def generate_instance(params: GeneratorParams, seed: int, name: Optional[str] = None) -> Instance:
    """Draw a random feasible instance.

    A hidden witness team (one candidate per position) is planted first; the
    positions' skill requirements come from the witness members and the skill
    demand never exceeds the witness coverage, so the witness is feasible.
    Demand is sized so that the headcount sums to exactly ``num_positions``.
    """
    params.check()
    rng = np.random.default_rng(seed)
    n_pos = params.num_positions
    n_cand = params.n_candidates()
    n_team = params.n_team_skills()
    n_skills = params.n_skills()
    skills = tuple(range(n_skills))
    team = tuple(sorted(int(s) for s in rng.choice(n_skills, size=n_team, replace=False)))

    skill_sets = []
    for _ in range(n_cand):
        k = int(rng.integers(1, params.max_skills_per_candidate + 1))
        first = int(team[rng.integers(n_team)])
        others = rng.choice(n_skills, size=k - 1, replace=False) if k > 1 else []
        skill_sets.append({first, *(int(s) for s in others)})

    witness = [int(c) for c in rng.permutation(n_cand)[:n_pos]]
    # every team skill must be covered by the witness team
    for t, c in enumerate(witness[:n_team]):
        skill_sets[c].add(team[t])

    positions = []
    for j, c in enumerate(witness):
        owned = sorted(skill_sets[c])
        k = int(rng.integers(1, min(params.max_required_skills, len(owned)) + 1))
        req = tuple(sorted(int(s) for s in rng.choice(owned, size=k, replace=False)))
        w = rng.random(params.dims) + 1e-12
        w = w / w.sum()
        positions.append(Position(j, req, tuple(float(x) for x in w)))

    coverage = {s: sum(1 for c in witness if s in skill_sets[c]) for s in team}
    demand = {s: 1 for s in team}
    slots = [s for s in team for _ in range(coverage[s] - 1)]
    extra = n_pos - n_team
    for idx in rng.choice(len(slots), size=extra, replace=False):
        demand[slots[idx]] += 1

    rel = rng.choice(np.array([-1, 0, 1]), size=(n_cand, n_cand), p=params.relation_probs)
    rel = np.triu(rel, 1)
    rel = rel + rel.T
    np.fill_diagonal(rel, 1)

    mu = rng.random((n_cand, n_pos, params.dims))
    nu = rng.random((n_cand, n_pos, params.dims)) * (1.0 - mu)
    evals = np.stack([mu, nu], axis=-1)

    inst = Instance(
        name=name if name is not None else f"{n_pos}-{seed}",
        seed=int(seed),
        skills=skills,
        team_skills=team,
        demand=demand,
        candidates=tuple(Candidate(i, tuple(sorted(s))) for i, s in enumerate(skill_sets)),
        positions=tuple(positions),
        relations=rel.astype(int),
        evaluations=evals,
    )
    object.__setattr__(inst, "witness", tuple(witness))
    return inst


def witness_assignment(inst: Instance):
    """Position-ordered witness team planted by the generator (None if unknown)."""
    return getattr(inst, "witness", None)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    location: tuple = field(default=())

    def __str__(self):
        loc = f" at {self.location}" if self.location else ""
        return f"[{self.code}] {self.message}{loc}"


def validate_instance(inst: Instance) -> list[Violation]:
    """Report every broken invariant; an empty list means the instance is well formed."""
    out: list[Violation] = []
    skill_set = set(inst.skills)
    team = set(inst.team_skills)
    n_c, n_p = inst.n_candidates, inst.n_positions

    if len(skill_set) != len(inst.skills):
        out.append(Violation("skills", "duplicate skill identifiers"))
    if not team <= skill_set:
        out.append(Violation("team_skills", "team skills not a subset of the skill pool", tuple(sorted(team - skill_set))))
    if not team:
        out.append(Violation("team_skills", "no team skills"))

    for idx, c in enumerate(inst.candidates):
        if c.id != idx:
            out.append(Violation("candidates", "candidate ids must be 0-based and contiguous", (idx,)))
        if not c.skills:
            out.append(Violation("candidates", "candidate has no skills", (idx,)))
        elif not set(c.skills) <= skill_set:
            out.append(Violation("candidates", "candidate skill outside the skill pool", (idx,)))
        if not set(c.skills) & team:
            out.append(Violation("assumption 1", "candidate has no skill required by the team", (idx,)))
    if n_c <= n_p:
        out.append(Violation("assumption 2", f"need more candidates ({n_c}) than positions ({n_p})"))

    if set(inst.demand) != team:
        out.append(Violation("demand", "demand keys must equal the team skills"))
    for s, n in inst.demand.items():
        if int(n) != n or n < 1:
            out.append(Violation("demand", "demand must be a positive integer", (s,)))
    if sum(inst.demand.values()) > n_p:
        out.append(Violation("demand", f"total demand {sum(inst.demand.values())} exceeds {n_p} positions"))

    dims = None
    for idx, p in enumerate(inst.positions):
        if p.id != idx:
            out.append(Violation("positions", "position ids must be 0-based and contiguous", (idx,)))
        if not p.required_skills:
            out.append(Violation("positions", "position requires no skill", (idx,)))
        elif not set(p.required_skills) <= skill_set:
            out.append(Violation("positions", "required skill outside the skill pool", (idx,)))
        w = np.asarray(p.weights, dtype=float)
        if dims is None:
            dims = len(w)
        if len(w) != dims or len(w) == 0:
            out.append(Violation("weights", "inconsistent number of competency dimensions", (idx,)))
        elif np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            out.append(Violation("weights", "weights must be non-negative and sum to 1", (idx,)))

    rel = np.asarray(inst.relations)
    if rel.shape != (n_c, n_c):
        out.append(Violation("relations", f"expected shape {(n_c, n_c)}, got {rel.shape}"))
    else:
        bad = np.argwhere(~np.isin(rel, (-1, 0, 1)))
        if len(bad):
            out.append(Violation("relations", "entries must be -1, 0 or 1", tuple(map(int, bad[0]))))
        asym = np.argwhere(rel != rel.T)
        if len(asym):
            out.append(Violation("symmetry", "relations matrix is not symmetric", tuple(map(int, asym[0]))))
        diag = np.flatnonzero(np.diag(rel) != 1)
        if len(diag):
            out.append(Violation("relations", "diagonal entries must be 1", (int(diag[0]),)))

    ev = np.asarray(inst.evaluations, dtype=float)
    if ev.shape != (n_c, n_p, dims or 0, 2):
        out.append(Violation("evaluations", f"expected shape {(n_c, n_p, dims, 2)}, got {ev.shape}"))
    else:
        mu, nu = ev[..., 0], ev[..., 1]
        bad = ~np.isfinite(ev).all(axis=-1) | (mu < 0) | (mu > 1) | (nu < 0) | (nu > 1) | (mu + nu > 1 + 1e-9)
        if bad.any():
            where = tuple(int(x) for x in np.argwhere(bad)[0])
            out.append(Violation("evaluations", "invalid IFN (need 0 <= mu, nu and mu + nu <= 1)", where))
    return out


def instance_to_dict(inst: Instance) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": inst.name,
        "seed": inst.seed,
        "skills": list(inst.skills),
        "team_skills": list(inst.team_skills),
        "demand": {str(s): int(n) for s, n in sorted(inst.demand.items())},
        "candidates": [{"id": c.id, "skills": list(c.skills)} for c in inst.candidates],
        "positions": [
            {"id": p.id, "required_skills": list(p.required_skills), "weights": list(p.weights)}
            for p in inst.positions
        ],
        "relations": np.asarray(inst.relations).tolist(),
        "evaluations": np.asarray(inst.evaluations, dtype=float).tolist(),
    }


def _require(doc: dict, key: str):
    if key not in doc:
        raise InstanceParseError(key, "missing field")
    return doc[key]


def _int_list(value, where: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
        raise InstanceParseError(where, "expected a list of integers")
    return tuple(value)


def instance_from_dict(doc: dict, validate: bool = True) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceParseError("<root>", "expected a JSON object")
    version = _require(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise InstanceParseError("schema_version", f"unsupported version {version!r}")
    name = _require(doc, "name")
    if not isinstance(name, str):
        raise InstanceParseError("name", "expected a string")
    seed = doc.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise InstanceParseError("seed", "expected an integer or null")
    skills = _int_list(_require(doc, "skills"), "skills")
    team = _int_list(_require(doc, "team_skills"), "team_skills")

    raw_demand = _require(doc, "demand")
    if not isinstance(raw_demand, dict):
        raise InstanceParseError("demand", "expected an object mapping skill -> count")
    demand = {}
    for k, v in raw_demand.items():
        try:
            key = int(k)
        except ValueError:
            raise InstanceParseError(f"demand.{k}", "skill key is not an integer") from None
        if not isinstance(v, int) or isinstance(v, bool):
            raise InstanceParseError(f"demand.{k}", "expected an integer count")
        demand[key] = v

    raw_cands = _require(doc, "candidates")
    if not isinstance(raw_cands, list):
        raise InstanceParseError("candidates", "expected a list")
    candidates = []
    for idx, c in enumerate(raw_cands):
        if not isinstance(c, dict):
            raise InstanceParseError(f"candidates[{idx}]", "expected an object")
        cid = _require_at(c, "id", f"candidates[{idx}]")
        candidates.append(Candidate(int(cid), _int_list(_require_at(c, "skills", f"candidates[{idx}]"), f"candidates[{idx}].skills")))

    raw_pos = _require(doc, "positions")
    if not isinstance(raw_pos, list):
        raise InstanceParseError("positions", "expected a list")
    positions = []
    for idx, p in enumerate(raw_pos):
        if not isinstance(p, dict):
            raise InstanceParseError(f"positions[{idx}]", "expected an object")
        where = f"positions[{idx}]"
        req = _int_list(_require_at(p, "required_skills", where), f"{where}.required_skills")
        w = _require_at(p, "weights", where)
        if not isinstance(w, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in w):
            raise InstanceParseError(f"{where}.weights", "expected a list of numbers")
        positions.append(Position(int(_require_at(p, "id", where)), req, tuple(float(x) for x in w)))

    try:
        relations = np.array(_require(doc, "relations"), dtype=int)
    except (TypeError, ValueError) as exc:
        raise InstanceParseError("relations", f"expected a rectangular integer matrix ({exc})") from None
    if relations.ndim != 2:
        raise InstanceParseError("relations", "expected a 2-D matrix")
    try:
        evaluations = np.array(_require(doc, "evaluations"), dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceParseError("evaluations", f"expected nested arrays of [mu, nu] ({exc})") from None
    if evaluations.ndim != 4 or evaluations.shape[-1] != 2:
        raise InstanceParseError("evaluations", f"expected shape (C, P, L, 2), got {evaluations.shape}")

    inst = Instance(
        name=name,
        seed=seed,
        skills=skills,
        team_skills=team,
        demand=demand,
        candidates=tuple(candidates),
        positions=tuple(positions),
        relations=relations,
        evaluations=evaluations,
    )
    if validate:
        problems = validate_instance(inst)
        if problems:
            raise InstanceValidationError(problems)
    return inst


def _require_at(obj: dict, key: str, where: str):
    if key not in obj:
        raise InstanceParseError(f"{where}.{key}", "missing field")
    return obj[key]


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), separators=(",", ":"))


def save_instance(inst: Instance, path) -> Path:
    problems = validate_instance(inst)
    if problems:
        raise InstanceValidationError(problems)
    path = Path(path)
    path.write_text(dumps_instance(inst) + "\n", encoding="utf-8")
    return path


def load_instance(path, validate: bool = True) -> Instance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceParseError("<document>", f"invalid JSON at line {exc.lineno} column {exc.colno}") from None
    return instance_from_dict(doc, validate=validate)
