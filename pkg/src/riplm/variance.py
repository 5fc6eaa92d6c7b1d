"""Variance bookkeeping and the diagnostic inequalities built on it.

The central quantity is the per-round played variance

    Var_t(p) = sum_{i in E_t} p(i) * (l_i - <p, l>)**2,

whose running total is the second-order budget that replaces the horizon in
adaptive regret bounds.  It is dominated round by round by the worst-case
variance over all distributions on the awake set, which has the closed form
((max l - min l) / 2)**2 (achieved by a half-half mix of the two extreme
losses).  The module also checks, numerically, the adaptive-step telescoping
inequality, the second-order bound on the accumulator row sums, the identity
between the log-partition Bregman divergence and scaled KL at initialization,
and assembles the empirical-regret-versus-bound report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .pl_core import (
    AwakeSet,
    Distribution,
    Temperature,
    log_partition,
    restricted_softmax,
    scores_from_distribution,
    tau_value,
)
from .trial import TrialLog

DOMINATION_SLACK = 1e-12
INEQUALITY_SLACK = 1e-9


@dataclass
class VarianceLedger:
    """Per-round variance increments with their worst-case counterparts."""

    increments: np.ndarray
    max_increments: np.ndarray

    def __post_init__(self) -> None:
        self.increments = np.asarray(self.increments, dtype=float)
        self.max_increments = np.asarray(self.max_increments, dtype=float)
        if self.increments.shape != self.max_increments.shape:
            raise ValueError("increment arrays must have matching shapes")

    @classmethod
    def from_trial(cls, trial: TrialLog) -> "VarianceLedger":
        return cls(trial.variance_increments, trial.max_variance_increments)

    @property
    def total_variance(self) -> float:
        return float(np.cumsum(self.increments)[-1]) if len(self.increments) else 0.0

    @property
    def total_max_variance(self) -> float:
        return float(np.cumsum(self.max_increments)[-1]) if len(self.max_increments) else 0.0

    def prefix_totals(self) -> tuple[np.ndarray, np.ndarray]:
        return np.cumsum(self.increments), np.cumsum(self.max_increments)

    def dominated_everywhere(self, slack: float = DOMINATION_SLACK) -> bool:
        """True when every round's increment is at most its worst-case value."""
        return bool(np.all(self.increments <= self.max_increments + slack))

    def worst_excess(self) -> float:
        """max over rounds of (increment - worst case); <= 0 when dominated."""
        if len(self.increments) == 0:
            return 0.0
        return float(np.max(self.increments - self.max_increments))


class InequalityCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


class BregmanKlCheck(NamedTuple):
    bregman: float
    kl_scaled: float
    diff: float


@dataclass
class BoundReport:
    """Empirical regret against a comparator next to the assembled bound."""

    empirical_regret: float
    bound_value: float
    ratio: float
    kl_term: float
    lnln_term: float
    sqrt_n_over_tau: float
    total_variance: float


def round_variance(p: Distribution, losses: np.ndarray) -> float:
    """Variance of the losses under p over its support; zero iff constant."""
    l = np.asarray(losses, dtype=float)
    if l.shape != (p.support.n_total,):
        raise ValueError(f"losses must have shape ({p.support.n_total},), got {l.shape}")
    idx = p.support.indices
    on = l[idx]
    if not np.all(np.isfinite(on)):
        raise ValueError("losses must be finite on the support")
    sp = p.probs[idx]
    mean = float(np.dot(sp, on))
    return float(np.dot(sp, (on - mean) ** 2))


def max_round_variance(losses: np.ndarray, awake: AwakeSet) -> float:
    """max over distributions u on E of sum_i u(i) (l_i - <u, l>)**2.

    The maximizer splits mass evenly between the smallest and largest awake
    loss, giving ((max - min) / 2)**2.
    """
    l = np.asarray(losses, dtype=float)[awake.indices]
    if not np.all(np.isfinite(l)):
        raise ValueError("losses must be finite on the awake set")
    return float(((l.max() - l.min()) / 2.0) ** 2)


def _accumulator_path(trial: TrialLog) -> np.ndarray:
    """Per-round accumulator values right after each round's addition."""
    return np.cumsum(trial.gradients**2, axis=0)


def telescoping_check(trial: TrialLog, delta: float) -> InequalityCheck:
    """sum_t sum_i g_{t,i}^2 / sqrt(G_{t,i} + delta) <= 2 sum_i sqrt(G_{T,i} + delta).

    G_{t,i} is the post-accumulation value (the round's own squared gradient
    is inside the square root), matching the learner's update order.
    """
    g2 = trial.gradients**2
    path = np.cumsum(g2, axis=0)
    lhs = float(np.sum(g2 / np.sqrt(path + delta)))
    rhs = 2.0 * float(np.sum(np.sqrt(path[-1] + delta)))
    return InequalityCheck(lhs, rhs, lhs <= rhs + INEQUALITY_SLACK)


def _effective_tau(trial: TrialLog) -> float:
    temps = trial.temperatures[np.isfinite(trial.temperatures)]
    return float(temps.min()) if len(temps) else math.inf


def second_bound_check(trial: TrialLog, delta: float) -> InequalityCheck:
    """sum_i sqrt(G_{T,i}) <= (sqrt(N) / tau) * sqrt(V_T) + N * sqrt(delta).

    tau is the smallest temperature in effect during the trial (the fixed
    temperature for uncooled runs, the realized floor otherwise).  The
    N * sqrt(delta) slack makes the delta-offset comparison with the
    telescoping right-hand side literally true via sqrt(a + d) <= sqrt(a) +
    sqrt(d).
    """
    final_acc = np.cumsum(trial.gradients**2, axis=0)[-1]
    lhs = float(np.sum(np.sqrt(final_acc)))
    n = trial.n_experts
    tau = _effective_tau(trial)
    v_t = float(np.cumsum(trial.variance_increments)[-1])
    rhs = math.sqrt(n) / tau * math.sqrt(v_t) + n * math.sqrt(delta)
    return InequalityCheck(lhs, rhs, lhs <= rhs + INEQUALITY_SLACK)


def _full_positive(u: np.ndarray | Distribution, n: int, name: str) -> np.ndarray:
    vals = u.probs if isinstance(u, Distribution) else np.asarray(u, dtype=float)
    if vals.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {vals.shape}")
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
        raise ValueError(f"{name} must be strictly positive everywhere")
    s = float(vals.sum())
    return vals / s if abs(s - 1.0) > 1e-12 else vals


def bregman_kl_check(
    u: np.ndarray | Distribution,
    prior: np.ndarray | Distribution,
    tau: Temperature | float,
) -> BregmanKlCheck:
    """Numeric Bregman divergence at initialization versus tau * KL(u || prior).

    Scores are initialized to tau * log(prior); the comparator's scores come
    from the inverse softmax map.  The divergence of the log-partition
    potential between those two score vectors (taken at the comparator) is
    computed numerically and must equal tau * KL(u || prior).
    """
    t = tau_value(tau)
    un = np.asarray(u.probs if isinstance(u, Distribution) else u, dtype=float)
    n = un.shape[0]
    uv = _full_positive(u, n, "comparator")
    pv = _full_positive(prior, n, "prior")
    full = AwakeSet.full(n)
    s_prior = t * np.log(pv)
    s_u = scores_from_distribution(Distribution(full, uv), t, shift=0.0)
    grad_at_u = restricted_softmax(s_u, t, full).probs
    bregman = (
        log_partition(s_prior, t, full)
        - log_partition(s_u, t, full)
        - float(np.dot(grad_at_u, s_prior - s_u))
    )
    kl_scaled = t * float(np.dot(uv, np.log(uv / pv)))
    return BregmanKlCheck(bregman, kl_scaled, abs(bregman - kl_scaled))


def comparator_regret(trial: TrialLog, u: np.ndarray | Distribution) -> float:
    """sum_t (<p_t, l_t> - <u restricted to E_t, l_t>) for a positive comparator."""
    uv = _full_positive(u, trial.n_experts, "comparator")
    total = 0.0
    for t, (awake, row) in enumerate(trial.history.rounds()):
        idx = awake.indices
        vals = uv[idx]
        comp = float(np.dot(vals, row[idx])) / float(vals.sum())
        total += float(trial.expected_losses[t]) - comp
    return total


def regret_bound_report(
    trial: TrialLog,
    u: np.ndarray | Distribution,
    prior: np.ndarray | Distribution,
    bound_constant: float = 10.0,
) -> BoundReport:
    """Assemble the second-order regret bound and compare it with a trial.

    bound = C * (sqrt(N) / tau) * sqrt(V_T * (KL(u || prior) + lnln(1 + T))),
    with the lnln term clamped at zero for tiny horizons where ln ln(1 + T)
    goes negative.  The leading constant is caller-supplied; the ratio
    empirical / bound is reported rather than asserted.
    """
    n = trial.n_experts
    uv = _full_positive(u, n, "comparator")
    pv = _full_positive(prior, n, "prior")
    kl = float(np.dot(uv, np.log(uv / pv)))
    lnln = max(0.0, math.log(math.log(1.0 + trial.horizon)))
    tau = _effective_tau(trial)
    v_t = trial.total_variance
    sqrt_n_over_tau = math.sqrt(n) / tau
    bound = bound_constant * sqrt_n_over_tau * math.sqrt(v_t * (kl + lnln))
    empirical = comparator_regret(trial, uv)
    ratio = empirical / bound if bound > 0.0 else math.nan
    return BoundReport(
        empirical_regret=empirical,
        bound_value=bound,
        ratio=ratio,
        kl_term=kl,
        lnln_term=lnln,
        sqrt_n_over_tau=sqrt_n_over_tau,
        total_variance=v_t,
    )
