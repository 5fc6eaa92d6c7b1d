"""The rank-induced Plackett-Luce mirror descent learner.

Per round, with awake set E and temperature tau:

    play      p(i) = exp(s_i / tau) / sum_{j in E} exp(s_j / tau)   for i in E
    observe   losses l_i in [0, 1] for i in E
    residual  r_i = l_i - <p, l>
    gradient  g_i = p(i) * r_i / tau          (exact gradient of s -> <p(s), l>)
    update    G_i += g_i**2,  then  s_i -= eta * g_i / sqrt(G_i + delta)

The accumulator update happens before the score step, so the current gradient
sits inside its own denominator and the very first step is well defined.
Experts outside E are untouched.  Optional cooling resets the temperature to
max(tau_min, c / sqrt(round_variance + delta)) after each round, sharpening
play as the residual variance grows.

A learner instance owns its state and must not be mutated concurrently;
distinct instances run in parallel freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pl_core import AwakeSet, Distribution, Temperature, restricted_softmax, tau_value


@dataclass(frozen=True)
class HyperParams:
    """Learner hyperparameters.

    Defaults: unit learning rate, delta = 1e-6 stabilizer, fixed temperature 1
    (cooling off), temperature floor 0.05, unit cooling constant.
    """

    eta: float = 1.0
    delta: float = 1e-6
    tau_init: float = 1.0
    tau_min: float = 0.05
    cooling_c: float = 1.0
    cooling_enabled: bool = False

    def __post_init__(self) -> None:
        if not (self.eta > 0 and self.delta > 0 and self.cooling_c > 0):
            raise ValueError("eta, delta, and cooling_c must be positive")
        if not 0 < self.tau_min <= self.tau_init:
            raise ValueError("need 0 < tau_min <= tau_init")


@dataclass
class RoundOutcome:
    """Everything observable about one played round."""

    played: Distribution
    sampled_expert: int | None
    mean_loss: float
    residuals: np.ndarray           # full length, zero off the awake set
    gradients: np.ndarray           # full length, zero off the awake set
    variance_increment: float       # sum_i p(i) * r_i**2
    temperature: float              # tau in effect when the round was played


def validate_losses(losses: np.ndarray, awake: AwakeSet) -> np.ndarray:
    """Check losses are in [0, 1] on the awake set; other entries are ignored."""
    l = np.asarray(losses, dtype=float)
    if l.shape != (awake.n_total,):
        raise ValueError(f"losses must have shape ({awake.n_total},), got {l.shape}")
    on = l[awake.indices]
    ok = np.isfinite(on) & (on >= 0.0) & (on <= 1.0)
    if not ok.all():
        i = awake.indices[np.argmin(ok)]
        raise ValueError(f"loss for awake expert {i} is outside [0, 1]: {l[i]!r}")
    return l


def surrogate_gradient(p: Distribution, losses: np.ndarray, tau: Temperature | float) -> np.ndarray:
    """Gradient of s -> <softmax(s/tau) restricted to E, losses> at the played p.

    Returns a full-length vector, zero off the support.  The entries are
    centered under p (sum_i p(i) * r_i = 0), and |g_i| <= p(i) / tau because
    losses live in [0, 1].
    """
    t = tau_value(tau)
    l = validate_losses(losses, p.support)
    idx = p.support.indices
    sp = p.probs[idx]
    mean = float(np.dot(sp, l[idx]))
    g = np.zeros(p.support.n_total, dtype=float)
    g[idx] = sp * (l[idx] - mean) / t
    return g


def make_round_outcome(
    p: Distribution,
    awake: AwakeSet,
    losses: np.ndarray,
    gradients: np.ndarray | None = None,
    temperature: float = float("nan"),
) -> RoundOutcome:
    """Assemble round statistics (mean loss, residuals, variance) for any learner."""
    l = validate_losses(losses, awake)
    idx = awake.indices
    sp = p.probs[idx]
    mean = float(np.dot(sp, l[idx]))
    r = np.zeros(awake.n_total, dtype=float)
    r[idx] = l[idx] - mean
    inc = float(np.dot(sp, r[idx] ** 2))
    g = np.zeros(awake.n_total, dtype=float) if gradients is None else gradients
    return RoundOutcome(p, None, mean, r, g, inc, temperature)


def sample_many(p: Distribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` expert indices from p by inverse CDF over the support."""
    cum = np.cumsum(p.support_probs)
    u = rng.random(size)
    k = np.searchsorted(cum, u, side="right")
    np.minimum(k, len(cum) - 1, out=k)
    return p.support.indices[k]


def sample(p: Distribution, rng: np.random.Generator) -> int:
    """Draw one expert index from p; deterministic given the generator state."""
    return int(sample_many(p, rng, 1)[0])


class RiplmLearner:
    """Online learner: restricted softmax play + diagonal adaptive score updates."""

    def __init__(
        self,
        n_experts: int,
        hp: HyperParams | None = None,
        prior: np.ndarray | None = None,
    ) -> None:
        n = int(n_experts)
        if n < 2:
            raise ValueError("need at least 2 experts")
        self.n_experts = n
        self.hp = hp or HyperParams()
        if prior is None:
            self.scores = np.zeros(n, dtype=float)
        else:
            pi = np.asarray(prior, dtype=float)
            if pi.shape != (n,):
                raise ValueError(f"prior must have shape ({n},), got {pi.shape}")
            if not np.all(np.isfinite(pi)) or np.any(pi <= 0.0):
                raise ValueError("prior must be strictly positive on every expert")
            s = float(pi.sum())
            if abs(s - 1.0) > 1e-12:
                pi = pi / s
            self.scores = self.hp.tau_init * np.log(pi)
        self.accumulators = np.zeros(n, dtype=float)
        self.tau = Temperature(self.hp.tau_init, self.hp.tau_min)
        self.round = 0

    def play(self, awake: AwakeSet) -> Distribution:
        """The distribution over awake experts at the current state."""
        return restricted_softmax(self.scores, self.tau, awake)

    def cool_temperature(self, outcome: RoundOutcome) -> Temperature:
        """Next temperature: max(tau_min, c / sqrt(variance_increment + delta)).

        Uses only the given round's variance increment.  Returns the current
        temperature unchanged when cooling is disabled.
        """
        if not self.hp.cooling_enabled:
            return self.tau
        t = self.hp.cooling_c / math.sqrt(outcome.variance_increment + self.hp.delta)
        return Temperature(max(self.hp.tau_min, t), self.hp.tau_min)

    def update(self, awake: AwakeSet, losses: np.ndarray) -> RoundOutcome:
        """Observe one round of losses and update scores in place.

        Asleep experts' scores and accumulators are untouched.  Returns the
        round outcome; ``sampled_expert`` is None (sampling is a separate
        concern, see ``step``).
        """
        p = self.play(awake)
        l = validate_losses(losses, awake)
        idx = awake.indices
        sp = p.probs[idx]
        on = l[idx]
        mean = float(np.dot(sp, on))
        r_on = on - mean
        g_on = sp * r_on / self.tau.tau
        residuals = np.zeros(awake.n_total, dtype=float)
        residuals[idx] = r_on
        gradients = np.zeros(awake.n_total, dtype=float)
        gradients[idx] = g_on
        outcome = RoundOutcome(
            played=p,
            sampled_expert=None,
            mean_loss=mean,
            residuals=residuals,
            gradients=gradients,
            variance_increment=float(np.dot(sp, r_on**2)),
            temperature=self.tau.tau,
        )
        self.accumulators[idx] += g_on**2
        self.scores[idx] -= self.hp.eta * g_on / np.sqrt(self.accumulators[idx] + self.hp.delta)
        self.tau = self.cool_temperature(outcome)
        self.round += 1
        return outcome

    def step(self, awake: AwakeSet, losses: np.ndarray, rng: np.random.Generator) -> RoundOutcome:
        """Full round: update, then record a sampled expert from the played p."""
        outcome = self.update(awake, losses)
        outcome.sampled_expert = sample(outcome.played, rng)
        return outcome

    def state_snapshot(self) -> dict:
        return {
            "scores": self.scores.copy(),
            "accumulators": self.accumulators.copy(),
            "tau": self.tau.tau,
            "round": self.round,
        }
