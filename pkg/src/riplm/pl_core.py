"""Restricted-softmax / Plackett-Luce primitives for sleeping experts.

Everything here operates on an "awake set" E, the subset of experts that is
available in a given round.  The central object is the choice distribution

    p(i) = exp(s_i / tau) / sum_{j in E} exp(s_j / tau),    i in E,

i.e. a temperature-scaled softmax of per-expert scores restricted to E.
The module provides the forward map (scores -> distribution), its inverse
(distribution -> scores, which exists for any strictly positive target), the
geometric "rank-induced" distributions that concentrate on the top-ranked
awake expert as eps -> 0, and the restriction / smoothing operations used to
turn an arbitrary comparator over all experts into a valid comparator on E.

All softmax evaluations are max-shifted before exponentiation, so scores with
magnitude up to 1e6 (after dividing by tau) never overflow.  All values are
treated as immutable after construction and are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Distributions are renormalized on construction when their mass drifts from 1
# by more than this; larger off-support mass is an error.
NORMALIZATION_TOL = 1e-12

DEFAULT_TAU_MIN = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class AwakeSet:
    """Nonempty ordered set of awake expert indices inside [0, n_total)."""

    members: tuple[int, ...]
    n_total: int
    _indices: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        members = tuple(int(i) for i in self.members)
        if len(members) == 0:
            raise ValueError("awake set must be nonempty")
        if len(set(members)) != len(members):
            raise ValueError(f"awake set has duplicate indices: {members}")
        n = int(self.n_total)
        if n < 1:
            raise ValueError("n_total must be >= 1")
        if min(members) < 0 or max(members) >= n:
            raise ValueError(f"awake indices {members} out of range [0, {n})")
        members = tuple(sorted(members))
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "n_total", n)
        object.__setattr__(self, "_indices", _readonly(np.array(members, dtype=np.intp)))

    @classmethod
    def full(cls, n_total: int) -> "AwakeSet":
        return cls(tuple(range(int(n_total))), int(n_total))

    @property
    def indices(self) -> np.ndarray:
        """Member indices as a read-only integer array (ascending)."""
        return self._indices

    @property
    def is_full(self) -> bool:
        return len(self.members) == self.n_total

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, i: int) -> bool:
        return i in self.members


@dataclass(frozen=True)
class Temperature:
    """Softmax temperature with a positive floor used by cooling schedules."""

    tau: float
    tau_min: float = DEFAULT_TAU_MIN

    def __post_init__(self) -> None:
        tau = float(self.tau)
        tau_min = float(self.tau_min)
        if not math.isfinite(tau) or not math.isfinite(tau_min):
            raise ValueError("temperature must be finite")
        if not 0.0 < tau_min <= tau:
            raise ValueError(f"need 0 < tau_min <= tau, got tau={tau}, tau_min={tau_min}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "tau_min", tau_min)


def tau_value(tau: "Temperature | float") -> float:
    """Accept either a Temperature or a bare positive float."""
    t = tau.tau if isinstance(tau, Temperature) else float(tau)
    if not math.isfinite(t) or t <= 0.0:
        raise ValueError(f"temperature must be a positive finite number, got {t}")
    return t


@dataclass(frozen=True)
class Ranking:
    """A strict preference order over all experts, best expert first.

    ``order[k]`` is the expert holding rank k.  On a round with awake set E
    the ranking selects its highest-ranked member of E.
    """

    order: tuple[int, ...]
    _positions: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        order = tuple(int(i) for i in self.order)
        n = len(order)
        if n == 0 or sorted(order) != list(range(n)):
            raise ValueError(f"order must be a permutation of 0..{n - 1}, got {order}")
        pos = np.empty(n, dtype=np.intp)
        pos[list(order)] = np.arange(n)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "_positions", _readonly(pos))

    @classmethod
    def identity(cls, n: int) -> "Ranking":
        return cls(tuple(range(int(n))))

    @classmethod
    def by_ascending(cls, values: Sequence[float]) -> "Ranking":
        """Rank experts by ascending value; ties broken by smaller index."""
        v = np.asarray(values, dtype=float)
        return cls(tuple(int(i) for i in np.argsort(v, kind="stable")))

    @property
    def n(self) -> int:
        return len(self.order)

    @property
    def positions(self) -> np.ndarray:
        """Read-only array mapping expert index to zero-based rank."""
        return self._positions

    def position(self, expert: int) -> int:
        """Zero-based rank of an expert (0 = best)."""
        return int(self._positions[expert])

    def top_of(self, awake: AwakeSet) -> int:
        """The ranking's choice on a round: its highest-ranked awake expert."""
        idx = awake.indices
        return int(idx[np.argmin(self._positions[idx])])

    def restricted_order(self, awake: AwakeSet) -> tuple[int, ...]:
        """Awake experts sorted by this ranking, best first."""
        idx = awake.indices
        return tuple(int(i) for i in idx[np.argsort(self._positions[idx], kind="stable")])


@dataclass(frozen=True)
class Distribution:
    """Probability vector over all experts with mass only on ``support``.

    ``probs`` has length ``support.n_total`` and is exactly zero outside the
    support.  Mass is renormalized on construction if it drifts from 1 by more
    than NORMALIZATION_TOL; off-support mass above the tolerance is an error.
    """

    support: AwakeSet
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        n = self.support.n_total
        if p.shape != (n,):
            raise ValueError(f"probs must have shape ({n},), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite")
        if np.any(p < 0.0):
            raise ValueError("probabilities must be nonnegative")
        idx = self.support.indices
        on = float(p[idx].sum())
        total = float(p.sum())
        if on <= 0.0:
            raise ValueError("distribution has no mass on its support")
        if total - on > NORMALIZATION_TOL * max(1.0, total):
            raise ValueError("distribution has mass outside its support")
        out = np.zeros(n, dtype=float)
        if abs(on - 1.0) > NORMALIZATION_TOL:
            out[idx] = p[idx] / on
        else:
            out[idx] = p[idx]
        object.__setattr__(self, "probs", _readonly(out))

    @classmethod
    def from_support_probs(cls, support: AwakeSet, values: Iterable[float]) -> "Distribution":
        """Build a distribution from weights aligned with ``support.indices``."""
        v = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
        if v.shape != (len(support),):
            raise ValueError(f"expected {len(support)} weights, got {v.shape}")
        p = np.zeros(support.n_total, dtype=float)
        p[support.indices] = v
        return cls(support, p)

    @property
    def support_probs(self) -> np.ndarray:
        """Probabilities of the supported experts, aligned with support.indices."""
        return self.probs[self.support.indices]

    def expected(self, values: np.ndarray) -> float:
        """Expectation of per-expert values; entries off the support are ignored."""
        idx = self.support.indices
        return float(np.dot(self.probs[idx], np.asarray(values, dtype=float)[idx]))


def uniform_distribution(awake: AwakeSet) -> Distribution:
    m = len(awake)
    return Distribution.from_support_probs(awake, np.full(m, 1.0 / m))


def _checked_scores(scores: Sequence[float], n_total: int) -> np.ndarray:
    s = np.asarray(scores, dtype=float)
    if s.shape != (n_total,):
        raise ValueError(f"scores must have shape ({n_total},), got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite (no NaN or infinities)")
    return s


def restricted_softmax(scores: Sequence[float], tau: Temperature | float, awake: AwakeSet) -> Distribution:
    """Softmax of ``scores / tau`` restricted to the awake set.

    The maximum awake logit is subtracted before exponentiation, so the result
    is well defined for |s_i| / tau up to about 1e6 without overflow.
    """
    t = tau_value(tau)
    s = _checked_scores(scores, awake.n_total)
    z = s[awake.indices] / t
    z = z - z.max()
    w = np.exp(z)
    return Distribution.from_support_probs(awake, w / w.sum())


def log_partition(scores: Sequence[float], tau: Temperature | float, awake: AwakeSet) -> float:
    """tau * log sum_{j in E} exp(s_j / tau), evaluated with max-shifting."""
    t = tau_value(tau)
    s = _checked_scores(scores, awake.n_total)
    z = s[awake.indices] / t
    m = float(z.max())
    return t * (m + float(np.log(np.exp(z - m).sum())))


def scores_from_distribution(u: Distribution, tau: Temperature | float, shift: float = 0.0) -> np.ndarray:
    """Scores whose restricted softmax over ``u.support`` reproduces ``u``.

    Returns ``tau * log u_i + shift`` on the support.  The shift translates
    all logits and leaves the softmax unchanged, so any value is valid.
    Entries outside the support are filled with the smallest on-support score;
    they are irrelevant when the result is softmaxed over ``u.support``.
    """
    t = tau_value(tau)
    c = float(shift)
    if not math.isfinite(c):
        raise ValueError("shift must be finite")
    sp = u.support_probs
    if np.any(sp <= 0.0):
        raise ValueError(
            "distribution has zero mass on a supported expert; "
            "apply smooth_comparator before inverting"
        )
    on = t * np.log(sp) + c
    s = np.full(u.support.n_total, float(on.min()))
    s[u.support.indices] = on
    return s


def rank_induced_distribution(sigma: Ranking, eps: float, awake: AwakeSet) -> Distribution:
    """Geometric distribution in rank order: weight eps**k for rank k among awake.

    The expert ranked k-th among the awake members of ``sigma`` (k = 1, 2, ...)
    receives weight proportional to eps**(k-1).  As eps -> 0 the mass
    concentrates on the top-ranked awake expert.
    """
    e = float(eps)
    if not 0.0 < e < 1.0:
        raise ValueError(f"eps must lie strictly inside (0, 1), got {e}")
    order = sigma.restricted_order(awake)
    w = e ** np.arange(len(order), dtype=float)
    p = np.zeros(awake.n_total, dtype=float)
    p[list(order)] = w / w.sum()
    return Distribution(awake, p)


def pl_from_ranking_at_temperature(sigma: Ranking, tau: Temperature | float, awake: AwakeSet) -> Distribution:
    """Rank-induced distribution with ratio exp(-1/tau) between adjacent ranks.

    Equal to ``rank_induced_distribution(sigma, exp(-1/tau), awake)`` whenever
    exp(-1/tau) is representable; computed in log space so that very small tau
    degrades gracefully to a point mass on the top-ranked awake expert.
    """
    t = tau_value(tau)
    order = sigma.restricted_order(awake)
    w = np.exp(-np.arange(len(order), dtype=float) / t)
    p = np.zeros(awake.n_total, dtype=float)
    p[list(order)] = w / w.sum()
    return Distribution(awake, p)


def restrict_comparator(u: Distribution, awake: AwakeSet) -> Distribution:
    """Renormalize a comparator onto the awake set: u(i) / u(E) for i in E."""
    if u.support.n_total != awake.n_total:
        raise ValueError("comparator and awake set disagree on the number of experts")
    vals = u.probs[awake.indices]
    mass = float(vals.sum())
    if mass <= 0.0:
        raise ValueError(
            "comparator puts zero mass on the awake set; "
            "apply smooth_comparator before restricting"
        )
    return Distribution.from_support_probs(awake, vals / mass)


def smooth_comparator(u: Distribution, awake: AwakeSet, eps_mix: float) -> Distribution:
    """Mix the restricted comparator with the uniform distribution on E.

    Returns (1 - eps_mix) * restrict(u, E) + eps_mix * Unif(E), which is
    strictly positive on E and within L1 distance 2 * eps_mix of the plain
    restriction.  If the comparator has no mass at all on E, the restriction
    is undefined and the result degrades to Unif(E).
    """
    e = float(eps_mix)
    if not 0.0 < e < 1.0:
        raise ValueError(f"eps_mix must lie strictly inside (0, 1), got {e}")
    if u.support.n_total != awake.n_total:
        raise ValueError("comparator and awake set disagree on the number of experts")
    m = len(awake)
    vals = u.probs[awake.indices]
    mass = float(vals.sum())
    if mass > 0.0:
        base = vals / mass
        mixed = (1.0 - e) * base + e / m
    else:
        mixed = np.full(m, 1.0 / m)
    return Distribution.from_support_probs(awake, mixed)
