"""Loss/availability histories shared by environments, oracles, and the harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .pl_core import AwakeSet


@dataclass
class LossHistory:
    """A horizon of rounds: one awake set and one loss row per round.

    ``losses`` has shape (T, n_experts).  Only entries on the round's awake
    set are meaningful; asleep entries may hold placeholders (e.g. NaN for
    histories loaded from file) and are never read by consumers.
    """

    n_experts: int
    awake_sets: list[AwakeSet]
    losses: np.ndarray
    _validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = int(self.n_experts)
        losses = np.asarray(self.losses, dtype=float)
        t = len(self.awake_sets)
        if t < 1:
            raise ValueError("horizon must be >= 1")
        if losses.shape != (t, n):
            raise ValueError(f"losses must have shape ({t}, {n}), got {losses.shape}")
        self.n_experts = n
        self.losses = losses
        if self._validate:
            self._check_rounds()

    def _check_rounds(self) -> None:
        for r, awake in enumerate(self.awake_sets):
            if awake.n_total != self.n_experts:
                raise ValueError(f"round {r + 1}: awake set sized for {awake.n_total} experts, history has {self.n_experts}")
        if all(a.is_full for a in self.awake_sets):
            bad = ~(np.isfinite(self.losses) & (self.losses >= 0.0) & (self.losses <= 1.0))
            if bad.any():
                r, i = np.argwhere(bad)[0]
                raise ValueError(f"round {r + 1}: loss for expert {i} outside [0, 1]")
            return
        for r, awake in enumerate(self.awake_sets):
            row = self.losses[r, awake.indices]
            ok = np.isfinite(row) & (row >= 0.0) & (row <= 1.0)
            if not ok.all():
                i = awake.indices[np.argmin(ok)]
                raise ValueError(f"round {r + 1}: loss for expert {i} outside [0, 1]")

    @property
    def horizon(self) -> int:
        return len(self.awake_sets)

    @property
    def always_awake(self) -> bool:
        return all(a.is_full for a in self.awake_sets)

    def rounds(self) -> Iterator[tuple[AwakeSet, np.ndarray]]:
        for awake, row in zip(self.awake_sets, self.losses):
            yield awake, row

    def prefix(self, t: int) -> "LossHistory":
        """The first t rounds as a history (no revalidation)."""
        if not 1 <= t <= self.horizon:
            raise ValueError(f"prefix length must be in [1, {self.horizon}], got {t}")
        return LossHistory(self.n_experts, self.awake_sets[:t], self.losses[:t], _validate=False)
