from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rlgp.problem import Candidate, Instance, Position

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def make_instance(
    cand_skills,
    pos_req,
    *,
    team=None,
    demand=None,
    relations=None,
    evals=None,
    weights=None,
    name="hand",
) -> Instance:
    """Small hand-built instance; unspecified parts get neutral defaults."""
    n_c, n_p = len(cand_skills), len(pos_req)
    skills = tuple(sorted({s for ss in cand_skills for s in ss} | {s for rs in pos_req for s in rs}))
    team = tuple(team) if team is not None else skills
    demand = dict(demand) if demand is not None else {s: 1 for s in team}
    if relations is None:
        relations = np.eye(n_c, dtype=int)
    if evals is None:
        evals = np.full((n_c, n_p, 1, 2), 0.25)
    evals = np.asarray(evals, dtype=float)
    dims = evals.shape[2]
    if weights is None:
        weights = [tuple([1.0 / dims] * dims)] * n_p
    return Instance(
        name=name,
        seed=None,
        skills=skills,
        team_skills=team,
        demand=demand,
        candidates=tuple(Candidate(i, tuple(sorted(s))) for i, s in enumerate(cand_skills)),
        positions=tuple(Position(j, tuple(sorted(r)), tuple(weights[j])) for j, r in enumerate(pos_req)),
        relations=np.asarray(relations, dtype=int),
        evaluations=evals,
    )


def evals_from_ez(ez) -> np.ndarray:
    """Single-dimension evaluations whose match score equals ``ez`` (mu - nu with mu + nu = 1)."""
    ez = np.asarray(ez, dtype=float)
    mu = (1.0 + ez) / 2.0
    return np.stack([mu, 1.0 - mu], axis=-1)[:, :, None, :]


@pytest.fixture
def make():
    return make_instance
