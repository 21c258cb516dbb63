"""Intuitionistic fuzzy numbers and the power interactive weighted average.

Scalar helpers operate on :class:`IFN` values; :func:`aggregate_tensor` is the
batched numpy path used to build the candidate/position match matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_EPS = 1e-9


@dataclass(frozen=True)
class IFN:
    """Intuitionistic fuzzy number <mu, nu>."""

    mu: float
    nu: float

    def __post_init__(self):
        if not (0.0 <= self.mu <= 1.0 and 0.0 <= self.nu <= 1.0):
            raise ValueError(f"IFN components must lie in [0, 1]: {self}")
        if self.mu + self.nu > 1.0 + _EPS:
            raise ValueError(f"IFN requires mu + nu <= 1: {self}")

    @property
    def hesitancy(self) -> float:
        return max(0.0, 1.0 - self.mu - self.nu)


def ifn_distance(a: IFN, b: IFN) -> float:
    """Hamming distance between two IFNs, in [0, 1]."""
    return 0.5 * (abs(a.mu - b.mu) + abs(a.nu - b.nu))


def ifn_support(a: IFN, b: IFN) -> float:
    return 1.0 - ifn_distance(a, b)


def _check_lengths(alphas: Sequence[IFN], w: Sequence[float]):
    if len(alphas) != len(w):
        raise ValueError(f"got {len(alphas)} evaluations but {len(w)} weights")
    if not alphas:
        raise ValueError("at least one competency dimension is required")


def support_totals(alphas: Sequence[IFN], w: Sequence[float]) -> list[float]:
    """Weighted support each evaluation receives from the other dimensions."""
    _check_lengths(alphas, w)
    n = len(alphas)
    return [
        sum(w[k] * ifn_support(alphas[k], alphas[l]) for k in range(n) if k != l)
        for l in range(n)
    ]


def ifpiwa_weights(alphas: Sequence[IFN], w: Sequence[float]) -> list[float]:
    """Support-adjusted aggregation weights; they always sum to one."""
    totals = support_totals(alphas, w)
    raw = [wl * (1.0 + tl) for wl, tl in zip(w, totals)]
    norm = sum(raw)
    if norm <= 0.0:
        raise ValueError("weights must not all be zero")
    return [r / norm for r in raw]


def ifpiwa_aggregate(alphas: Sequence[IFN], w: Sequence[float]) -> IFN:
    """Aggregate per-dimension evaluations into a single IFN.

    ``0 ** 0`` is taken as 1, which is what Python's float power does.
    """
    rho = ifpiwa_weights(alphas, w)
    keep = 1.0
    neither = 1.0
    for a, r in zip(alphas, rho):
        keep *= (1.0 - a.mu) ** r
        neither *= max(0.0, 1.0 - (a.mu + a.nu)) ** r
    mu = min(1.0, max(0.0, 1.0 - keep))
    nu = min(1.0 - mu, max(0.0, keep - neither))
    return IFN(mu, nu)


def match_score(agg: IFN) -> float:
    """Score function mu - nu, in [-1, 1]."""
    return agg.mu - agg.nu


def aggregate_tensor(evals: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Batched aggregation.

    Parameters
    ----------
    evals : array (C, P, L, 2)
        ``[..., 0]`` is membership, ``[..., 1]`` non-membership.
    weights : array (P, L)

    Returns
    -------
    array (C, P, 2) of aggregated (mu, nu).
    """
    evals = np.asarray(evals, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if evals.ndim != 4 or evals.shape[-1] != 2:
        raise ValueError(f"evaluations must have shape (C, P, L, 2), got {evals.shape}")
    if weights.shape != evals.shape[1:3]:
        raise ValueError(f"weights shape {weights.shape} does not match evaluations {evals.shape}")
    mu, nu = evals[..., 0], evals[..., 1]
    dist = 0.5 * (np.abs(mu[..., :, None] - mu[..., None, :]) + np.abs(nu[..., :, None] - nu[..., None, :]))
    sup = 1.0 - dist
    w = weights[None, :, :]
    # sup(l, l) == 1, so subtracting w_l removes the self term
    totals = np.einsum("cpkl,cpk->cpl", sup, np.broadcast_to(w, mu.shape)) - w
    raw = w * (1.0 + totals)
    rho = raw / raw.sum(axis=-1, keepdims=True)
    keep = np.prod((1.0 - mu) ** rho, axis=-1)
    neither = np.prod(np.clip(1.0 - (mu + nu), 0.0, None) ** rho, axis=-1)
    agg_mu = np.clip(1.0 - keep, 0.0, 1.0)
    agg_nu = np.clip(keep - neither, 0.0, None)
    agg_nu = np.minimum(agg_nu, 1.0 - agg_mu)
    return np.stack([agg_mu, agg_nu], axis=-1)


def match_matrix_from_arrays(evals: np.ndarray, weights: np.ndarray) -> np.ndarray:
    agg = aggregate_tensor(evals, weights)
    ez = agg[..., 0] - agg[..., 1]
    if not np.all(np.isfinite(ez)):
        raise ValueError("match matrix contains non-finite entries")
    return ez


def match_matrix(instance) -> np.ndarray:
    """ez[i, j]: match score of candidate i for position j (cached on the instance)."""
    return instance.ez


def is_valid_ifn(mu: float, nu: float, tol: float = _EPS) -> bool:
    return (
        math.isfinite(mu)
        and math.isfinite(nu)
        and 0.0 <= mu <= 1.0
        and 0.0 <= nu <= 1.0
        and mu + nu <= 1.0 + tol
    )
