"""Independent re-implementations used as test oracles.

Plain Python over lists and ``math``; nothing here imports the package's
numeric code, so agreement is a check between two separate derivations.
"""

from __future__ import annotations

import math


def ifn_aggregate(pairs, w):
    """(mu, nu) of the power-weighted interactive average, plus its intermediates."""
    n = len(pairs)
    d = [[0.5 * (abs(a[0] - b[0]) + abs(a[1] - b[1])) for b in pairs] for a in pairs]
    sup = [[1.0 - x for x in row] for row in d]
    t = [sum(w[k] * sup[l][k] for k in range(n) if k != l) for l in range(n)]
    denom = sum(w[k] * (1.0 + t[k]) for k in range(n))
    rho = [w[l] * (1.0 + t[l]) / denom for l in range(n)]
    p1 = math.prod((1.0 - pairs[l][0]) ** rho[l] for l in range(n))
    p2 = math.prod((1.0 - pairs[l][0] - pairs[l][1]) ** rho[l] for l in range(n))
    return {"d": d, "sup": sup, "T": t, "rho": rho, "mu": 1.0 - p1, "nu": p1 - p2}


def match(inst, i, j) -> float:
    pairs = [tuple(map(float, inst.evaluations[i, j, l])) for l in range(inst.evaluations.shape[2])]
    agg = ifn_aggregate(pairs, list(inst.positions[j].weights))
    return agg["mu"] - agg["nu"]


def _x_matrix(inst, holders):
    n_c, n_p = len(inst.candidates), len(inst.positions)
    x = [[0] * n_p for _ in range(n_c)]
    for j, c in enumerate(holders):
        x[c][j] += 1
    return x


def feasible(inst, holders) -> bool:
    """Assignment, demand, coverage and qualification constraints, checked one by one."""
    x = _x_matrix(inst, holders)
    n_c, n_p = len(x), len(x[0])
    y = [1 if sum(row) > 0 else 0 for row in x]
    skills = [set(c.skills) for c in inst.candidates]
    ok = all(sum(row) <= 1 for row in x)
    ok &= all(sum(x[i][j] for i in range(n_c)) == 1 for j in range(n_p))
    for s in inst.team_skills:
        have = sum(y[i] for i in range(n_c) if s in skills[i])
        ok &= have >= inst.demand[s] and have >= 1
    for i in range(n_c):
        for j in range(n_p):
            if x[i][j]:
                ok &= set(inst.positions[j].required_skills) <= skills[i]
    return bool(ok)


def total_efficiency(inst, holders) -> float:
    """TE of a position-ordered tuple of candidate ids via explicit 0-1 variables."""
    if not feasible(inst, holders):
        return 0.0
    x = _x_matrix(inst, holders)
    n_c, n_p = len(x), len(x[0])
    y = [1 if sum(row) > 0 else 0 for row in x]
    m = sum(inst.demand.values())
    pair_sum = sum(y[i] * y[k] * int(inst.relations[i][k]) for i in range(n_c) for k in range(n_c))
    gamma = 0.5 * (3.0 + pair_sum / (m * m))
    return sum(x[i][j] * match(inst, i, j) for i in range(n_c) for j in range(n_p)) * gamma


def q_update(q, s, a, r, s_next, alpha, discount):
    q = [row[:] for row in q]
    q[s][a] = q[s][a] + alpha * (r + discount * max(q[s_next]) - q[s][a])
    return q
