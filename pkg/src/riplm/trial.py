"""Per-trial record of everything a run produced."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .history import LossHistory
from .pl_core import Distribution


@dataclass
class TrialLog:
    """Immutable record of one trial: per-round arrays plus cumulative totals.

    Row t of the (T, N) arrays corresponds to round t+1; entries for asleep
    experts are zero.  ``cumulative_loss``, ``total_variance`` and
    ``total_max_variance`` are accumulated online in round order and agree
    with the fold of the per-round columns.
    """

    seed: int
    algorithm: str
    params: dict
    env_info: dict
    history: LossHistory
    played: np.ndarray                 # (T, N) played probabilities
    sampled: np.ndarray                # (T,) sampled expert per round
    gradients: np.ndarray              # (T, N) score-space gradients
    expected_losses: np.ndarray        # (T,) <p_t, l_t>
    variance_increments: np.ndarray    # (T,) sum_i p_t(i) r_i^2
    max_variance_increments: np.ndarray  # (T,) worst-case variance on E_t
    temperatures: np.ndarray           # (T,) tau in effect each round
    cumulative_loss: float
    total_variance: float
    total_max_variance: float
    final_scores: np.ndarray | None = None
    final_accumulators: np.ndarray | None = None
    restarts: tuple[int, ...] = field(default_factory=tuple)

    @property
    def horizon(self) -> int:
        return self.history.horizon

    @property
    def n_experts(self) -> int:
        return self.history.n_experts

    def played_distribution(self, t: int) -> Distribution:
        """The distribution played at round t+1 (zero-based t)."""
        return Distribution(self.history.awake_sets[t], self.played[t])

    def played_distributions(self) -> list[Distribution]:
        return [self.played_distribution(t) for t in range(self.horizon)]

    def identical(self, other: "TrialLog") -> bool:
        """Bit-exact equality of all numeric content (determinism checks)."""
        return (
            self.seed == other.seed
            and self.algorithm == other.algorithm
            and self.horizon == other.horizon
            and self.n_experts == other.n_experts
            and all(a.members == b.members for a, b in zip(self.history.awake_sets, other.history.awake_sets))
            and np.array_equal(self.history.losses, other.history.losses, equal_nan=True)
            and np.array_equal(self.played, other.played)
            and np.array_equal(self.sampled, other.sampled)
            and np.array_equal(self.gradients, other.gradients)
            and np.array_equal(self.expected_losses, other.expected_losses)
            and np.array_equal(self.variance_increments, other.variance_increments)
            and np.array_equal(self.max_variance_increments, other.max_variance_increments)
            and np.array_equal(self.temperatures, other.temperatures, equal_nan=True)
            and self.cumulative_loss == other.cumulative_loss
            and self.total_variance == other.total_variance
            and self.total_max_variance == other.total_max_variance
            and self.restarts == other.restarts
        )
