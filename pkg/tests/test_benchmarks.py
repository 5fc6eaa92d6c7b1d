import math
from itertools import permutations

import numpy as np
import pytest

from riplm import (
    AwakeSet,
    Distribution,
    LossHistory,
    Ranking,
    best_single_expert,
    distributional_loss,
    empirical_pl_rank_gap,
    pl_rank_gap_bound,
    rank_benchmark_exhaustive,
    rank_benchmark_heuristic,
    rank_benchmark_prefixes,
    rank_induced_distribution,
    regret,
    smooth_comparator,
    uniform_distribution,
)
from riplm.benchmarks import ranking_value
from riplm.diagnostics import loss_sorted_ranking

from conftest import random_history


def brute_force_rank_benchmark(hist: LossHistory):
    """Independent oracle: scalar scan over lexicographic permutations."""
    best_val, best_order = None, None
    for perm in permutations(range(hist.n_experts)):
        total = 0.0
        for awake, row in hist.rounds():
            for e in perm:
                if e in awake.members:
                    total += float(row[e])
                    break
        if best_val is None or total < best_val:
            best_val, best_order = total, perm
    return best_val, best_order


class TestExhaustive:
    def test_two_expert_single_round(self):
        hist = LossHistory(2, [AwakeSet.full(2)], np.array([[0.3, 0.1]]))
        res = rank_benchmark_exhaustive(hist)
        assert res.value == 0.1
        assert res.argmin.order == (1, 0)
        assert res.exact

    def test_matches_independent_brute_force(self):
        rng = np.random.default_rng(101)
        for _ in range(150):
            n = int(rng.integers(2, 6))
            t = int(rng.integers(1, 40))
            hist = random_history(rng, n, t)
            res = rank_benchmark_exhaustive(hist)
            val, order = brute_force_rank_benchmark(hist)
            assert res.value == val
            assert res.argmin.order == order

    def test_full_awake_equals_best_expert(self):
        rng = np.random.default_rng(102)
        for _ in range(60):
            n = int(rng.integers(2, 7))
            t = int(rng.integers(1, 50))
            hist = random_history(rng, n, t, always_awake=True)
            res = rank_benchmark_exhaustive(hist)
            single, expert = best_single_expert(hist)
            assert res.value == single
            assert res.argmin.order[0] == expert

    def test_rejects_large_n(self):
        hist = LossHistory(11, [AwakeSet.full(11)], np.zeros((1, 11)))
        with pytest.raises(ValueError, match="rank_benchmark_heuristic"):
            rank_benchmark_exhaustive(hist)

    def test_prefix_values_match_direct_computation(self):
        rng = np.random.default_rng(103)
        hist = random_history(rng, 4, 30)
        cps = [1, 7, 19, 30]
        vals = rank_benchmark_prefixes(hist, cps)
        for c, v in zip(cps, vals):
            assert v == rank_benchmark_exhaustive(hist.prefix(c)).value

    def test_lexicographic_tie_break(self):
        # all-zero losses: every order ties, the identity must win
        hist = LossHistory(3, [AwakeSet.full(3)] * 2, np.zeros((2, 3)))
        res = rank_benchmark_exhaustive(hist)
        assert res.argmin.order == (0, 1, 2)


class TestHeuristic:
    def test_upper_bound_and_reported_gap(self):
        rng = np.random.default_rng(104)
        gaps = []
        for _ in range(100):
            hist = random_history(rng, 4, 20)
            exact = rank_benchmark_exhaustive(hist)
            heur = rank_benchmark_heuristic(hist)
            assert heur.value >= exact.value
            assert not heur.exact
            assert heur.exact_gap is not None and heur.exact_gap >= 0.0
            assert heur.exact_gap == heur.value - exact.value
            gaps.append(heur.exact_gap / max(1.0, exact.value))
        # informational: typical quality of the heuristic on these instances
        print(f"heuristic mean relative gap over 100 trials: {float(np.mean(gaps)):.4f}")

    def test_single_round_exact(self):
        rng = np.random.default_rng(105)
        for _ in range(50):
            hist = random_history(rng, 5, 1)
            heur = rank_benchmark_heuristic(hist)
            exact = rank_benchmark_exhaustive(hist)
            assert heur.value == exact.value

    def test_value_matches_its_own_ranking(self):
        rng = np.random.default_rng(106)
        hist = random_history(rng, 5, 25)
        heur = rank_benchmark_heuristic(hist, compare_exact=False)
        assert ranking_value(hist, heur.argmin) == heur.value


class TestDistributionalLoss:
    def test_uniform_full_awake_is_mean(self):
        rng = np.random.default_rng(107)
        hist = random_history(rng, 4, 30, always_awake=True)
        u = uniform_distribution(AwakeSet.full(4))
        expect = float(hist.losses.mean(axis=1).sum())
        assert distributional_loss(hist, u) == pytest.approx(expect, rel=1e-12)

    def test_smoothed_point_mass_near_best_expert(self):
        rng = np.random.default_rng(108)
        t = 40
        hist = random_history(rng, 5, t, always_awake=True)
        best_val, best = best_single_expert(hist)
        point = np.zeros(5)
        point[best] = 1.0
        u = smooth_comparator(
            Distribution(AwakeSet.full(5), point), AwakeSet.full(5), 1e-9
        )
        assert abs(distributional_loss(hist, u) - best_val) <= 1e-6 * t

    def test_eps_grid_descends_to_rank_benchmark(self):
        rng = np.random.default_rng(109)
        grid = [0.5, 0.1, 0.01, 0.001]
        for _ in range(20):
            n = int(rng.integers(2, 7))
            t = int(rng.integers(1, 50))
            hist = random_history(rng, n, t, always_awake=True)
            bench = rank_benchmark_exhaustive(hist)
            sigma = bench.argmin
            vals = [
                distributional_loss(
                    hist, rank_induced_distribution(sigma, e, AwakeSet.full(n))
                )
                for e in grid
            ]
            assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
            assert vals[-1] >= bench.value - 1e-9
            assert vals[-1] - bench.value <= t * 0.001 / (1 - 0.001)

    def test_zero_awake_mass_names_round(self):
        hist = LossHistory(
            3,
            [AwakeSet.full(3), AwakeSet((2,), 3)],
            np.array([[0.1, 0.2, 0.3], [0.0, 0.0, 0.5]]),
        )
        u = Distribution.from_support_probs(AwakeSet((0, 1), 3), [0.5, 0.5])
        with pytest.raises(ValueError, match="round 2"):
            distributional_loss(hist, u)


class TestPlRankGap:
    def test_bound_values(self):
        assert pl_rank_gap_bound(1.0 / math.log(2.0)) == pytest.approx(1.0, rel=1e-12)
        expect = math.exp(-2.0) / (1.0 - math.exp(-2.0))
        assert pl_rank_gap_bound(0.5) == pytest.approx(expect, rel=1e-12)
        assert pl_rank_gap_bound(0.01) < 1e-40

    def test_constant_losses_zero_gap(self):
        hist = LossHistory(3, [AwakeSet.full(3)] * 4, np.full((4, 3), 0.6))
        gaps = empirical_pl_rank_gap(hist, Ranking.identity(3), 0.5)
        np.testing.assert_allclose(gaps, 0.0, atol=1e-15)

    def test_hand_value_two_experts(self):
        # weights (2/3, 1/3) at exp(-1/tau) = 0.5; top pick has loss 0
        tau = 1.0 / math.log(2.0)
        hist = LossHistory(2, [AwakeSet.full(2)], np.array([[0.0, 1.0]]))
        gaps = empirical_pl_rank_gap(hist, Ranking.identity(2), tau)
        assert gaps[0] == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_magnitude_bounded_for_any_ranking(self):
        rng = np.random.default_rng(110)
        for tau in (0.2, 0.5, 1.0):
            bound = pl_rank_gap_bound(tau)
            for _ in range(200):
                n = int(rng.integers(2, 7))
                hist = random_history(rng, n, 5)
                sigma = Ranking(tuple(int(i) for i in rng.permutation(n)))
                gaps = empirical_pl_rank_gap(hist, sigma, tau)
                assert np.all(np.abs(gaps) <= bound + 1e-12)

    def test_nonnegative_for_loss_sorted_ranking(self):
        rng = np.random.default_rng(111)
        for tau in (0.2, 0.5, 1.0):
            bound = pl_rank_gap_bound(tau)
            for _ in range(300):
                n = int(rng.integers(2, 9))
                losses = rng.random(n)
                awake = AwakeSet.full(n)
                sigma = loss_sorted_ranking(losses, awake)
                hist = LossHistory(n, [awake], losses[None, :])
                gap = float(empirical_pl_rank_gap(hist, sigma, tau)[0])
                assert -1e-12 <= gap <= bound + 1e-12


class TestRegret:
    def test_zero_against_own_play(self):
        rng = np.random.default_rng(112)
        hist = random_history(rng, 3, 20)
        played = [uniform_distribution(a) for a in hist.awake_sets]
        value = sum(p.expected(row) for p, (_, row) in zip(played, hist.rounds()))
        assert regret(hist, played, value) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_against_perfect_expert(self):
        n, t = 4, 25
        losses = np.ones((t, n))
        losses[:, 2] = 0.0
        hist = LossHistory(n, [AwakeSet.full(n)] * t, losses)
        played = [uniform_distribution(AwakeSet.full(n))] * t
        bench = rank_benchmark_exhaustive(hist)
        assert bench.value == 0.0
        assert regret(hist, played, bench) == pytest.approx(t * (n - 1) / n, rel=1e-12)

    def test_rank_vs_distributional_decomposition(self):
        # regret against the rank benchmark is at least the regret against
        # the rank-induced comparator minus the summed per-round gap bound
        rng = np.random.default_rng(113)
        for tau in (0.3, 0.7):
            for _ in range(30):
                n = int(rng.integers(2, 6))
                t = int(rng.integers(1, 30))
                hist = random_history(rng, n, t)
                played = [uniform_distribution(a) for a in hist.awake_sets]
                bench = rank_benchmark_exhaustive(hist)
                sigma = bench.argmin
                u = rank_induced_distribution(
                    sigma, math.exp(-1.0 / tau), AwakeSet.full(n)
                )
                r_rank = regret(hist, played, bench)
                r_dist = regret(hist, played, distributional_loss(hist, u))
                assert r_rank >= r_dist - t * pl_rank_gap_bound(tau) - 1e-9

    def test_misaligned_support_rejected(self):
        hist = LossHistory(3, [AwakeSet((0, 1), 3)], np.array([[0.1, 0.2, 0.3]]))
        played = [uniform_distribution(AwakeSet.full(3))]
        with pytest.raises(ValueError, match="round 1"):
            regret(hist, played, 0.0)

    def test_length_mismatch_rejected(self):
        hist = LossHistory(2, [AwakeSet.full(2)], np.array([[0.1, 0.2]]))
        with pytest.raises(ValueError, match="horizon"):
            regret(hist, [], 0.0)
