import math

import numpy as np
import pytest

from riplm import (
    AwakeSet,
    HyperParams,
    RiplmLearner,
    RoundOutcome,
    restricted_softmax,
    sample,
    sample_many,
    surrogate_gradient,
    uniform_distribution,
)
from riplm.pl_core import Distribution

from conftest import random_awake


def _fresh(n=3, **hp):
    return RiplmLearner(n, HyperParams(**hp))


class TestInit:
    def test_zero_init_without_prior(self):
        lrn = _fresh(3)
        np.testing.assert_array_equal(lrn.scores, 0.0)
        np.testing.assert_array_equal(lrn.accumulators, 0.0)
        assert lrn.tau.tau == 1.0 and lrn.round == 0

    def test_uniform_prior_matches_zero_init_play(self):
        a = RiplmLearner(2)
        b = RiplmLearner(2, prior=np.array([0.5, 0.5]))
        awake = AwakeSet.full(2)
        np.testing.assert_allclose(a.play(awake).probs, b.play(awake).probs, atol=1e-15)

    def test_prior_scores_formula(self):
        hp = HyperParams(tau_init=2.0)
        lrn = RiplmLearner(2, hp, prior=np.array([0.75, 0.25]))
        np.testing.assert_allclose(
            lrn.scores, [2 * math.log(0.75), 2 * math.log(0.25)], rtol=1e-15
        )
        np.testing.assert_allclose(lrn.play(AwakeSet.full(2)).probs, [0.75, 0.25], atol=1e-12)

    def test_zero_prior_entry_rejected(self):
        with pytest.raises(ValueError, match="strictly positive"):
            RiplmLearner(2, prior=np.array([1.0, 0.0]))

    def test_needs_two_experts(self):
        with pytest.raises(ValueError):
            RiplmLearner(1)

    def test_hyperparam_validation(self):
        with pytest.raises(ValueError):
            HyperParams(eta=0.0)
        with pytest.raises(ValueError):
            HyperParams(tau_min=2.0, tau_init=1.0)


class TestPlay:
    def test_fresh_state_plays_uniform(self):
        lrn = _fresh(4)
        for awake in (AwakeSet.full(4), AwakeSet((1, 3), 4)):
            np.testing.assert_allclose(
                lrn.play(awake).probs, uniform_distribution(awake).probs, atol=1e-15
            )

    def test_lowered_score_lowers_probability(self):
        lrn = _fresh(2)
        lrn.scores = np.array([0.0, -1.0])
        p = lrn.play(AwakeSet.full(2))
        assert p.probs[0] > p.probs[1]

    def test_matches_core_softmax(self):
        lrn = _fresh(2)
        lrn.scores = np.array([0.7, 0.0])
        p = lrn.play(AwakeSet.full(2))
        expect = math.exp(0.7) / (math.exp(0.7) + 1.0)
        np.testing.assert_allclose(p.probs, [expect, 1 - expect], rtol=1e-15)


class TestSample:
    def test_point_mass(self):
        p = Distribution.from_support_probs(AwakeSet.full(2), [1.0, 0.0])
        rng = np.random.default_rng(0)
        assert all(sample(p, rng) == 0 for _ in range(50))

    def test_seed_determinism(self):
        p = Distribution.from_support_probs(AwakeSet((1, 2, 4), 5), [0.2, 0.5, 0.3])
        a = sample_many(p, np.random.default_rng(123), 1000)
        b = sample_many(p, np.random.default_rng(123), 1000)
        np.testing.assert_array_equal(a, b)

    def test_single_and_vector_draws_agree(self):
        p = Distribution.from_support_probs(AwakeSet.full(3), [0.3, 0.3, 0.4])
        assert sample(p, np.random.default_rng(9)) == int(
            sample_many(p, np.random.default_rng(9), 1)[0]
        )

    def test_three_sigma_frequency(self):
        p = Distribution.from_support_probs(AwakeSet.full(2), [0.5, 0.5])
        draws = sample_many(p, np.random.default_rng(2024), 1_000_000)
        freq0 = float(np.mean(draws == 0))
        assert 0.4985 <= freq0 <= 0.5015  # 3 binomial standard errors

    def test_frequencies_match_support_probs(self):
        p = Distribution.from_support_probs(AwakeSet((0, 2, 3), 4), [0.1, 0.6, 0.3])
        draws = sample_many(p, np.random.default_rng(5), 200_000)
        for e, q in zip((0, 2, 3), (0.1, 0.6, 0.3)):
            se = math.sqrt(q * (1 - q) / 200_000)
            assert abs(float(np.mean(draws == e)) - q) <= 3 * se


class TestSurrogateGradient:
    def test_constant_losses_give_zero(self):
        p = uniform_distribution(AwakeSet.full(3))
        g = surrogate_gradient(p, np.full(3, 0.4), 1.0)
        np.testing.assert_allclose(g, 0.0, atol=1e-16)

    def test_hand_value(self):
        p = uniform_distribution(AwakeSet.full(2))
        g = surrogate_gradient(p, np.array([1.0, 0.0]), 1.0)
        np.testing.assert_allclose(g, [0.25, -0.25], rtol=1e-15)

    def test_centered_and_bounded(self):
        rng = np.random.default_rng(21)
        for _ in range(500):
            n = int(rng.integers(2, 17))
            awake = random_awake(rng, n)
            s = rng.normal(0, 2, n)
            tau = float(np.exp(rng.uniform(math.log(0.05), math.log(5))))
            losses = rng.random(n)
            p = restricted_softmax(s, tau, awake)
            g = surrogate_gradient(p, losses, tau)
            # sum_i g_i * tau = sum_i p(i) * r_i = 0: residuals centered under p
            assert abs(float(g.sum()) * tau) <= 1e-10
            assert np.all(np.abs(g) <= p.probs / tau + 1e-15)

    def test_finite_difference_agreement(self):
        rng = np.random.default_rng(33)
        h = 1e-6
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(2, 17))
            awake = random_awake(rng, n)
            s = rng.normal(0, 3, n)
            tau = float(np.exp(rng.uniform(math.log(0.05), math.log(5))))
            losses = rng.random(n)
            p = restricted_softmax(s, tau, awake)
            g = surrogate_gradient(p, losses, tau)
            fd = np.zeros(n)
            for i in awake.members:
                up, dn = s.copy(), s.copy()
                up[i] += h
                dn[i] -= h
                fd[i] = (
                    restricted_softmax(up, tau, awake).expected(losses)
                    - restricted_softmax(dn, tau, awake).expected(losses)
                ) / (2 * h)
            worst = max(worst, np.abs(g - fd).max() / max(1.0, np.abs(g).max()))
        assert worst <= 1e-6

    def test_out_of_range_loss_rejected(self):
        p = uniform_distribution(AwakeSet.full(2))
        with pytest.raises(ValueError, match="outside"):
            surrogate_gradient(p, np.array([1.2, 0.0]), 1.0)
        with pytest.raises(ValueError, match="outside"):
            surrogate_gradient(p, np.array([-0.1, 0.0]), 1.0)


class TestUpdate:
    def test_constant_losses_leave_state(self):
        lrn = _fresh(3)
        s0, g0 = lrn.scores.copy(), lrn.accumulators.copy()
        lrn.update(AwakeSet.full(3), np.full(3, 0.7))
        np.testing.assert_array_equal(lrn.scores, s0)
        np.testing.assert_array_equal(lrn.accumulators, g0)
        assert lrn.round == 1

    def test_hand_update_chain(self):
        lrn = _fresh(2, eta=1.0, delta=1e-6)
        out = lrn.update(AwakeSet.full(2), np.array([1.0, 0.0]))
        np.testing.assert_allclose(out.gradients, [0.25, -0.25], rtol=1e-15)
        np.testing.assert_allclose(lrn.accumulators, [1 / 16, 1 / 16], rtol=1e-15)
        step = 0.25 / math.sqrt(1 / 16 + 1e-6)
        np.testing.assert_allclose(lrn.scores, [-step, step], rtol=1e-12)
        assert step == pytest.approx(0.999992, abs=1e-6)

    def test_sleeping_experts_bit_identical(self):
        rng = np.random.default_rng(3)
        lrn = _fresh(5)
        asleep = 2
        for _ in range(100):
            members = [i for i in range(5) if i != asleep]
            keep = rng.choice(members, size=int(rng.integers(1, 5)), replace=False)
            awake = AwakeSet(tuple(int(i) for i in keep), 5)
            before = (lrn.scores[asleep], lrn.accumulators[asleep])
            lrn.update(awake, rng.random(5))
            assert (lrn.scores[asleep], lrn.accumulators[asleep]) == before

    def test_accumulators_nondecreasing(self):
        rng = np.random.default_rng(4)
        lrn = _fresh(4)
        prev = lrn.accumulators.copy()
        for _ in range(200):
            lrn.update(random_awake(rng, 4), rng.random(4))
            assert np.all(lrn.accumulators >= prev)
            prev = lrn.accumulators.copy()

    def test_outcome_residuals_centered(self):
        rng = np.random.default_rng(6)
        lrn = _fresh(6)
        for _ in range(200):
            awake = random_awake(rng, 6)
            out = lrn.update(awake, rng.random(6))
            p = out.played.probs
            assert abs(float(np.dot(p, out.residuals))) <= 1e-10
            assert out.variance_increment >= 0.0


class TestCooling:
    def test_disabled_keeps_tau(self):
        lrn = _fresh(3, cooling_enabled=False)
        lrn.update(AwakeSet.full(3), np.array([1.0, 0.0, 0.5]))
        assert lrn.tau.tau == 1.0

    def test_zero_variance_formula(self):
        lrn = _fresh(3, cooling_enabled=True, cooling_c=1.0, delta=1e-6)
        out = RoundOutcome(
            played=uniform_distribution(AwakeSet.full(3)),
            sampled_expert=None,
            mean_loss=0.5,
            residuals=np.zeros(3),
            gradients=np.zeros(3),
            variance_increment=0.0,
            temperature=1.0,
        )
        assert lrn.cool_temperature(out).tau == pytest.approx(
            max(0.05, 1.0 / math.sqrt(1e-6)), rel=1e-12
        )

    def test_huge_variance_clamps_to_floor(self):
        lrn = _fresh(3, cooling_enabled=True, cooling_c=1.0, tau_min=0.05)
        out = RoundOutcome(
            played=uniform_distribution(AwakeSet.full(3)),
            sampled_expert=None,
            mean_loss=0.5,
            residuals=np.zeros(3),
            gradients=np.zeros(3),
            variance_increment=1e6,
            temperature=1.0,
        )
        assert lrn.cool_temperature(out).tau == 0.05

    def test_cooled_tau_respects_floor_over_run(self):
        rng = np.random.default_rng(12)
        lrn = _fresh(3, cooling_enabled=True, tau_min=0.2)
        for _ in range(300):
            lrn.update(AwakeSet.full(3), (rng.random(3) > 0.5).astype(float))
            assert lrn.tau.tau >= 0.2


class TestStepDeterminism:
    def test_identical_seeds_identical_runs(self):
        rng_env = np.random.default_rng(55)
        losses = rng_env.random((50, 4))
        awakes = [random_awake(np.random.default_rng(100 + t), 4) for t in range(50)]

        def run(seed):
            lrn = _fresh(4)
            rng = np.random.default_rng(seed)
            picks, scores = [], None
            for t in range(50):
                out = lrn.step(awakes[t], losses[t], rng)
                picks.append(out.sampled_expert)
            return picks, lrn.scores.copy()

        p1, s1 = run(9)
        p2, s2 = run(9)
        assert p1 == p2
        np.testing.assert_array_equal(s1, s2)

    def test_telescoping_inequality_online(self):
        # adaptive-step norm sum stays under twice the final accumulator roots
        rng = np.random.default_rng(77)
        lrn = _fresh(8)
        lhs = 0.0
        for _ in range(500):
            awake = random_awake(rng, 8)
            out = lrn.update(awake, rng.random(8))
            idx = awake.indices
            lhs += float(
                np.sum(out.gradients[idx] ** 2 / np.sqrt(lrn.accumulators[idx] + lrn.hp.delta))
            )
        rhs = 2.0 * float(np.sum(np.sqrt(lrn.accumulators + lrn.hp.delta)))
        assert lhs <= rhs + 1e-9
