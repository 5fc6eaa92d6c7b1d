"""Randomized self-check sweeps usable at runtime (CLI `check` / `gradcheck`).

Each sweep draws its own instances from a fixed-seed stream so that repeated
invocations produce identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .benchmarks import empirical_pl_rank_gap, pl_rank_gap_bound
from .history import LossHistory
from .learner import surrogate_gradient
from .pl_core import AwakeSet, Ranking, restricted_softmax
from .variance import bregman_kl_check

DEFAULT_SWEEP_SEED = 20260801


@dataclass
class GradCheckResult:
    max_rel_err: float
    instances: int
    step: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tolerance


def _random_awake(rng: np.random.Generator, n: int) -> AwakeSet:
    size = int(rng.integers(1, n + 1))
    members = rng.choice(n, size=size, replace=False)
    return AwakeSet(tuple(int(i) for i in members), n)


def gradient_check_sweep(
    instances: int = 1000,
    seed: int = DEFAULT_SWEEP_SEED,
    max_n: int = 16,
    step: float = 1e-6,
    tolerance: float = 1e-6,
) -> GradCheckResult:
    """Compare analytic gradients with central finite differences.

    For each instance the scalar map is s -> <softmax(s / tau) on E, losses>.
    The per-instance error is ||analytic - numeric||_inf scaled by
    max(1, ||analytic||_inf), so large gradients are compared relatively and
    vanishing ones absolutely.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(2, max_n + 1))
        awake = _random_awake(rng, n)
        s = rng.normal(0.0, 3.0, n)
        tau = float(np.exp(rng.uniform(math.log(0.05), math.log(5.0))))
        losses = rng.random(n)
        p = restricted_softmax(s, tau, awake)
        analytic = surrogate_gradient(p, losses, tau)
        numeric = np.zeros(n)
        for i in awake.members:
            hi = s.copy()
            lo = s.copy()
            hi[i] += step
            lo[i] -= step
            f_hi = restricted_softmax(hi, tau, awake).expected(losses)
            f_lo = restricted_softmax(lo, tau, awake).expected(losses)
            numeric[i] = (f_hi - f_lo) / (2.0 * step)
        err = float(np.max(np.abs(analytic - numeric)))
        scale = max(1.0, float(np.max(np.abs(analytic))))
        worst = max(worst, err / scale)
    return GradCheckResult(worst, instances, step, tolerance)


def bregman_kl_sweep(
    instances: int = 1000, seed: int = DEFAULT_SWEEP_SEED, max_n: int = 32
) -> float:
    """Worst |Bregman - tau * KL| over random (comparator, prior, tau) triples."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(2, max_n + 1))
        u = rng.dirichlet(np.ones(n))
        prior = rng.dirichlet(np.ones(n))
        tau = float(np.exp(rng.uniform(math.log(0.05), math.log(5.0))))
        if u.min() <= 0.0 or prior.min() <= 0.0:
            continue
        worst = max(worst, bregman_kl_check(u, prior, tau).diff)
    return worst


def loss_sorted_ranking(losses: np.ndarray, awake: AwakeSet) -> Ranking:
    """Ranking that orders the awake experts by ascending loss, asleep last.

    Its top awake pick is the best expert of the round, the configuration in
    which the rank-induced play is never better than the top pick and the
    per-round gap lies in [0, pl_rank_gap_bound(tau)].
    """
    l = np.asarray(losses, dtype=float)
    n = awake.n_total
    asleep = [i for i in range(n) if i not in awake]
    front = sorted(awake.members, key=lambda i: (l[i], i))
    return Ranking(tuple(front + asleep))


def pl_rank_gap_sweep(
    rounds: int = 10_000,
    taus: tuple[float, ...] = (0.2, 0.5, 1.0),
    seed: int = DEFAULT_SWEEP_SEED,
    max_n: int = 8,
) -> tuple[float, float]:
    """Min gap and max (gap - bound) over random loss-sorted rounds.

    Returns (worst_lower, worst_upper): the sweep passes when worst_lower is
    >= 0 and worst_upper <= 0 up to slack.
    """
    rng = np.random.default_rng(seed)
    worst_lower = math.inf
    worst_upper = -math.inf
    for _ in range(rounds):
        n = int(rng.integers(2, max_n + 1))
        awake = _random_awake(rng, n)
        losses = rng.random(n)
        sigma = loss_sorted_ranking(losses, awake)
        hist = LossHistory(n, [awake], losses[None, :], _validate=False)
        for tau in taus:
            gap = float(empirical_pl_rank_gap(hist, sigma, tau)[0])
            worst_lower = min(worst_lower, gap)
            worst_upper = max(worst_upper, gap - pl_rank_gap_bound(tau))
    return worst_lower, worst_upper
