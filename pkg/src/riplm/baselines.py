"""Reference learners: awake-restricted exponential weights and uniform play.

Both expose the same per-round protocol as the main learner (``play`` /
``update`` / ``step``), so the harness treats all algorithms uniformly.
"""

from __future__ import annotations

import math

import numpy as np

from .learner import RoundOutcome, make_round_outcome, sample, validate_losses
from .pl_core import AwakeSet, Distribution, restricted_softmax, uniform_distribution


def uniform_play(awake: AwakeSet) -> Distribution:
    """Uniform distribution over the awake experts."""
    return uniform_distribution(awake)


class HedgeLearner:
    """Exponential weights restricted to the awake set (temperature fixed at 1).

    With no explicit learning rate, uses sqrt(8 ln N / T) when the horizon is
    known and the anytime rate sqrt(8 ln N / t) otherwise.
    """

    def __init__(self, n_experts: int, learning_rate: float | None = None, horizon: int | None = None) -> None:
        n = int(n_experts)
        if n < 2:
            raise ValueError("need at least 2 experts")
        self.n_experts = n
        if learning_rate is not None and learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        self.learning_rate = learning_rate
        self.horizon = horizon
        self.log_weights = np.zeros(n, dtype=float)
        self.round = 0

    def _rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        t = self.horizon if self.horizon is not None else self.round + 1
        return math.sqrt(8.0 * math.log(self.n_experts) / t)

    def play(self, awake: AwakeSet) -> Distribution:
        return restricted_softmax(self.log_weights, 1.0, awake)

    def update(self, awake: AwakeSet, losses: np.ndarray) -> RoundOutcome:
        p = self.play(awake)
        l = validate_losses(losses, awake)
        outcome = make_round_outcome(p, awake, l, temperature=1.0)
        idx = awake.indices
        self.log_weights[idx] -= self._rate() * l[idx]
        self.round += 1
        return outcome

    def step(self, awake: AwakeSet, losses: np.ndarray, rng: np.random.Generator) -> RoundOutcome:
        outcome = self.update(awake, losses)
        outcome.sampled_expert = sample(outcome.played, rng)
        return outcome

    def state_snapshot(self) -> dict:
        return {"scores": self.log_weights.copy(), "round": self.round}


class UniformLearner:
    """Plays uniformly over the awake set and never learns."""

    def __init__(self, n_experts: int) -> None:
        self.n_experts = int(n_experts)
        self.round = 0

    def play(self, awake: AwakeSet) -> Distribution:
        return uniform_play(awake)

    def update(self, awake: AwakeSet, losses: np.ndarray) -> RoundOutcome:
        outcome = make_round_outcome(self.play(awake), awake, losses)
        self.round += 1
        return outcome

    def step(self, awake: AwakeSet, losses: np.ndarray, rng: np.random.Generator) -> RoundOutcome:
        outcome = self.update(awake, losses)
        outcome.sampled_expert = sample(outcome.played, rng)
        return outcome

    def state_snapshot(self) -> dict:
        return {"round": self.round}
