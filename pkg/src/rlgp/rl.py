"""Tabular Q-learning over population search modes."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class State(IntEnum):
    IMPROVED = 0
    NOT_IMPROVED = 1


class Mode(IntEnum):
    P1 = 0  # common population
    P2 = 1  # common population with the global best injected
    P3 = 2  # global best + previous generation best
    P4 = 3  # P1 and P3 together


N_STATES = len(State)
N_ACTIONS = len(Mode)


@dataclass
class RLConfig:
    alpha: float = 0.01
    gamma_discount: float = 0.9
    epsilon: float = 0.2
    # "prose": explore when u < epsilon; "pseudocode": explore when epsilon <= u
    epsilon_convention: str = "prose"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0.0 <= self.gamma_discount <= 1.0:
            raise ValueError("gamma_discount must lie in [0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.epsilon_convention not in ("prose", "pseudocode"):
            raise ValueError("epsilon_convention must be 'prose' or 'pseudocode'")


def new_q_table() -> np.ndarray:
    return np.zeros((N_STATES, N_ACTIONS))


def observe_state(prev_best: float, new_best: float) -> State:
    return State.IMPROVED if new_best > prev_best else State.NOT_IMPROVED


def reward(f_t: float, f_prev: float) -> float:
    return f_t - f_prev


def q_update(q: np.ndarray, s: int, a: int, r: float, s_next: int, cfg: RLConfig) -> np.ndarray:
    """One-step Q-learning update, in place; returns ``q``."""
    target = r + cfg.gamma_discount * q[s_next].max()
    q[s, a] += cfg.alpha * (target - q[s, a])
    return q


def greedy_action(q: np.ndarray, s: int) -> Mode:
    return Mode(int(np.argmax(q[s])))  # first maximum, i.e. lowest index


def epsilon_greedy(s: int, q: np.ndarray, cfg: RLConfig, rng: np.random.Generator) -> Mode:
    u = rng.random()
    explore = u < cfg.epsilon if cfg.epsilon_convention == "prose" else cfg.epsilon <= u
    if explore:
        return Mode(int(rng.integers(N_ACTIONS)))
    return greedy_action(q, s)
