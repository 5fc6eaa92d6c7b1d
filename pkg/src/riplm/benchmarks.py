"""Comparator benchmarks over loss histories, exact at desk scale.

The rank benchmark is the smallest cumulative loss achievable by a fixed
preference order that plays its highest-ranked awake expert each round; it is
computed exactly by enumerating all N! orders (N <= 10), with a greedy +
local-search upper bound for larger N.  The distributional benchmark
evaluates a fixed comparator distribution, renormalized to each round's awake
set.  The two meet through the rank-induced geometric distributions: their
distributional loss converges to the ranking's benchmark value as the decay
parameter goes to zero, with a per-round gap at most eps / (1 - eps).

Cumulative losses are accumulated strictly in round order so that independent
reimplementations that do the same produce bit-identical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import chain, permutations
from typing import Sequence

import numpy as np

from .history import LossHistory
from .pl_core import (
    Distribution,
    Ranking,
    Temperature,
    pl_from_ranking_at_temperature,
    tau_value,
)

EXHAUSTIVE_MAX_EXPERTS = 10


@dataclass
class BenchmarkResult:
    """A benchmark value and the comparator that achieved it."""

    value: float
    argmin: Ranking | Distribution
    exact: bool = True
    exact_gap: float | None = None


def _distinct_awake_sets(hist: LossHistory) -> tuple[list[np.ndarray], np.ndarray]:
    """Group rounds by awake set: (member arrays, per-round group id)."""
    groups: dict[tuple[int, ...], int] = {}
    members: list[np.ndarray] = []
    ids = np.empty(hist.horizon, dtype=np.intp)
    for t, awake in enumerate(hist.awake_sets):
        key = awake.members
        gid = groups.get(key)
        if gid is None:
            gid = len(members)
            groups[key] = gid
            members.append(awake.indices)
        ids[t] = gid
    return members, ids


def ranking_value(hist: LossHistory, sigma: Ranking) -> float:
    """Cumulative loss of a fixed ranking playing its top awake expert."""
    if sigma.n != hist.n_experts:
        raise ValueError("ranking and history disagree on the number of experts")
    members, ids = _distinct_awake_sets(hist)
    pos = sigma.positions
    tops = np.array([m[np.argmin(pos[m])] for m in members], dtype=np.intp)
    chosen = tops[ids]
    vals = hist.losses[np.arange(hist.horizon), chosen]
    return float(np.cumsum(vals)[-1])


def _permutation_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All permutations of range(n) in lexicographic order, plus rank positions."""
    count = math.factorial(n)
    perms = np.fromiter(
        chain.from_iterable(permutations(range(n))), dtype=np.int8, count=count * n
    ).reshape(count, n)
    pos = np.empty_like(perms)
    np.put_along_axis(pos, perms, np.arange(n, dtype=np.int8)[None, :], axis=1)
    return perms, pos


def _scan_rankings(
    hist: LossHistory, checkpoints: Sequence[int] | None = None
) -> tuple[float, Ranking, list[float]]:
    """One pass over all rankings: final minimum, argmin, prefix minima.

    Accumulates per-ranking totals round by round, so the returned value is
    bit-identical to a scalar loop that sums the chosen losses in round order.
    The argmin is the lexicographically smallest minimizer (permutations are
    enumerated in lexicographic order and ties keep the first).
    """
    n = hist.n_experts
    perms, pos = _permutation_tables(n)
    members, ids = _distinct_awake_sets(hist)
    chosen_by_group = [m[np.argmin(pos[:, m], axis=1)].astype(np.int8) for m in members]
    total = np.zeros(perms.shape[0], dtype=float)
    cps = sorted(set(int(c) for c in checkpoints)) if checkpoints else []
    prefix_values: list[float] = []
    cp_iter = iter(cps)
    next_cp = next(cp_iter, None)
    for t in range(hist.horizon):
        total += hist.losses[t, chosen_by_group[ids[t]]]
        if next_cp is not None and t + 1 == next_cp:
            prefix_values.append(float(total.min()))
            next_cp = next(cp_iter, None)
    best = int(np.argmin(total))
    return float(total[best]), Ranking(tuple(int(i) for i in perms[best])), prefix_values


def rank_benchmark_exhaustive(hist: LossHistory) -> BenchmarkResult:
    """Exact rank benchmark by enumeration over all N! orders (N <= 10).

    Ties are broken toward the lexicographically smallest order.
    """
    if hist.n_experts > EXHAUSTIVE_MAX_EXPERTS:
        raise ValueError(
            f"exhaustive search enumerates N! orders and is limited to "
            f"N <= {EXHAUSTIVE_MAX_EXPERTS}; use rank_benchmark_heuristic for N = {hist.n_experts}"
        )
    value, sigma, _ = _scan_rankings(hist)
    return BenchmarkResult(value=value, argmin=sigma, exact=True)


def rank_benchmark_prefixes(hist: LossHistory, rounds: Sequence[int]) -> list[float]:
    """Exact rank benchmark values on the prefixes ending at the given rounds."""
    if hist.n_experts > EXHAUSTIVE_MAX_EXPERTS:
        raise ValueError(f"prefix enumeration limited to N <= {EXHAUSTIVE_MAX_EXPERTS}")
    bad = [r for r in rounds if not 1 <= r <= hist.horizon]
    if bad:
        raise ValueError(f"prefix rounds out of range: {bad}")
    _, _, prefix_values = _scan_rankings(hist, checkpoints=rounds)
    return prefix_values


def best_single_expert(hist: LossHistory) -> tuple[float, int]:
    """Minimum single-expert cumulative loss on an always-awake history."""
    if not hist.always_awake:
        raise ValueError("best_single_expert requires every expert awake every round")
    totals = np.zeros(hist.n_experts, dtype=float)
    for row in hist.losses:
        totals += row
    i = int(np.argmin(totals))
    return float(totals[i]), i


def _partial_order_value(hist: LossHistory, order: list[int]) -> float:
    """Cumulative loss of a partial order; rounds with no placed awake expert add 0."""
    placed = np.full(hist.n_experts, -1, dtype=np.intp)
    for k, x in enumerate(order):
        placed[x] = k
    total = 0.0
    for awake, row in hist.rounds():
        idx = awake.indices
        p = placed[idx]
        live = p >= 0
        if live.any():
            sub = idx[live]
            total += float(row[sub[np.argmin(p[live])]])
    return total


def rank_benchmark_heuristic(hist: LossHistory, compare_exact: bool = True) -> BenchmarkResult:
    """Upper bound on the rank benchmark: greedy insertion + pairwise swaps.

    Experts are inserted in order of mean awake loss, each at the position
    minimizing the partial value; local search then tries all pairwise
    position swaps, capped at N**2 improving passes.  Always returns a valid
    order whose value is >= the exact benchmark.  For N <= 10 (when
    ``compare_exact``) the gap to the exhaustive value is reported.
    """
    n = hist.n_experts
    sums = np.zeros(n)
    counts = np.zeros(n)
    for awake, row in hist.rounds():
        idx = awake.indices
        sums[idx] += row[idx]
        counts[idx] += 1.0
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1.0), np.inf)
    insertion = [int(i) for i in np.argsort(means, kind="stable")]

    order: list[int] = []
    for x in insertion:
        best_pos, best_val = 0, math.inf
        for k in range(len(order) + 1):
            val = _partial_order_value(hist, order[:k] + [x] + order[k:])
            if val < best_val:
                best_pos, best_val = k, val
        order.insert(best_pos, x)

    sigma = Ranking(tuple(order))
    value = ranking_value(hist, sigma)
    for _ in range(n * n):
        improved = False
        for a in range(n - 1):
            for b in range(a + 1, n):
                cand = list(sigma.order)
                cand[a], cand[b] = cand[b], cand[a]
                cand_sigma = Ranking(tuple(cand))
                cand_value = ranking_value(hist, cand_sigma)
                if cand_value < value:
                    sigma, value = cand_sigma, cand_value
                    improved = True
        if not improved:
            break

    gap = None
    if compare_exact and n <= EXHAUSTIVE_MAX_EXPERTS:
        gap = value - rank_benchmark_exhaustive(hist).value
    return BenchmarkResult(value=value, argmin=sigma, exact=False, exact_gap=gap)


def distributional_loss(hist: LossHistory, u: Distribution) -> float:
    """Cumulative loss of a fixed comparator, renormalized to each awake set."""
    if u.support.n_total != hist.n_experts:
        raise ValueError("comparator and history disagree on the number of experts")
    total = 0.0
    for t, (awake, row) in enumerate(hist.rounds()):
        idx = awake.indices
        vals = u.probs[idx]
        mass = float(vals.sum())
        if mass <= 0.0:
            raise ValueError(
                f"comparator has zero mass on the awake set at round {t + 1}; "
                "apply smooth_comparator first"
            )
        total += float(np.dot(vals, row[idx])) / mass
    return total


def pl_rank_gap_bound(tau: Temperature | float) -> float:
    """Worst-case per-round gap between geometric rank play and the top pick.

    Equals q / (1 - q) with q = exp(-1 / tau): the ratio of tail mass to head
    mass of the geometric weights, which bounds |<u, l> - l_top| for losses
    in [0, 1].
    """
    q = math.exp(-1.0 / tau_value(tau))
    return q / (1.0 - q)


def empirical_pl_rank_gap(hist: LossHistory, sigma: Ranking, tau: Temperature | float) -> np.ndarray:
    """Per-round gap between the rank-induced play and the ranking's top pick.

    Entry t is <u_sigma_tau restricted to E_t, l_t> minus the loss of sigma's
    top awake expert.  Its magnitude never exceeds ``pl_rank_gap_bound(tau)``;
    it is nonnegative whenever sigma orders that round's awake losses
    ascendingly (in particular for a per-round loss-sorted ranking).
    """
    gaps = np.empty(hist.horizon, dtype=float)
    for t, (awake, row) in enumerate(hist.rounds()):
        d = pl_from_ranking_at_temperature(sigma, tau, awake)
        gaps[t] = d.expected(row) - float(row[sigma.top_of(awake)])
    return gaps


def regret(
    hist: LossHistory,
    played: Sequence[Distribution],
    benchmark: BenchmarkResult | float,
) -> float:
    """Cumulative expected played loss minus the benchmark value."""
    if len(played) != hist.horizon:
        raise ValueError(f"{len(played)} played rounds for a horizon of {hist.horizon}")
    total = 0.0
    for t, (awake, row) in enumerate(hist.rounds()):
        p = played[t]
        if p.support.members != awake.members:
            raise ValueError(f"played support does not match the awake set at round {t + 1}")
        total += p.expected(row)
    value = benchmark.value if isinstance(benchmark, BenchmarkResult) else float(benchmark)
    return total - value
