"""Loss and availability generators, plus file-driven scripted sequences.

All generators are pure functions of their spec, including its seed: distinct
random purposes (losses, availability, distinguished-expert draw) use
distinct substreams derived from (seed, tag), so trials can run in any order
or in parallel without changing a single byte of output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .history import LossHistory
from .pl_core import AwakeSet
from .trial import TrialLog

ALWAYS_AWAKE = "always_awake"
IID_AWAKE = "iid_awake"

_LOSS_STREAM = 1
_AWAKE_STREAM = 2
_ISTAR_STREAM = 3


class ScriptedFormatError(ValueError):
    """A scripted-history file failed to parse or violated an invariant."""


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed), stream)))


@dataclass
class StochasticEnvSpec:
    """Independent per-expert Bernoulli losses with optional random availability."""

    means: tuple[float, ...]
    horizon: int
    seed: int
    availability: str = ALWAYS_AWAKE
    awake_prob: float = 1.0

    def __post_init__(self) -> None:
        self.means = tuple(float(m) for m in self.means)
        if len(self.means) < 2:
            raise ValueError("need at least 2 experts")
        if any(not 0.0 <= m <= 1.0 for m in self.means):
            raise ValueError("means must lie in [0, 1]")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be >= 1")
        self.horizon = int(self.horizon)
        if self.availability not in (ALWAYS_AWAKE, IID_AWAKE):
            raise ValueError(f"unknown availability {self.availability!r}")
        if not 0.0 < self.awake_prob <= 1.0:
            raise ValueError("awake_prob must lie in (0, 1]")

    @property
    def n_experts(self) -> int:
        return len(self.means)


@dataclass
class LowerBoundEnvSpec:
    """Randomized-experts construction: one expert at 1/2 - eps, the rest at 1/2 + eps.

    Every expert is awake every round.  When ``horizon`` is unset it defaults
    to ceil(t_multiplier / eps_gap**2), the exploration-scale horizon.
    """

    n_experts: int
    eps_gap: float
    seed: int
    horizon: int | None = None
    t_multiplier: float = 1.0
    i_star: int | None = None

    def __post_init__(self) -> None:
        if int(self.n_experts) < 2:
            raise ValueError("need at least 2 experts")
        self.n_experts = int(self.n_experts)
        e = float(self.eps_gap)
        if not 0.0 < e <= 0.125:
            raise ValueError(f"eps_gap must lie in (0, 1/8], got {e}")
        self.eps_gap = e
        if self.horizon is not None and int(self.horizon) < 1:
            raise ValueError("horizon must be >= 1")
        if self.t_multiplier <= 0:
            raise ValueError("t_multiplier must be positive")
        if self.i_star is not None and not 0 <= int(self.i_star) < self.n_experts:
            raise ValueError("i_star out of range")

    @property
    def effective_horizon(self) -> int:
        if self.horizon is not None:
            return int(self.horizon)
        return int(math.ceil(self.t_multiplier / self.eps_gap**2))


@dataclass
class ScriptedEnv:
    """An explicit round sequence, typically loaded from file."""

    history: LossHistory
    source: str | None = None


def generate_stochastic(spec: StochasticEnvSpec) -> LossHistory:
    """Sample a full loss history; availability resamples any all-asleep round."""
    n, t = spec.n_experts, spec.horizon
    means = np.array(spec.means)
    losses = (_rng(spec.seed, _LOSS_STREAM).random((t, n)) < means).astype(float)
    if spec.availability == ALWAYS_AWAKE:
        awake_sets = [AwakeSet.full(n)] * t
    else:
        arng = _rng(spec.seed, _AWAKE_STREAM)
        awake_sets = []
        for _ in range(t):
            mask = arng.random(n) < spec.awake_prob
            while not mask.any():
                mask = arng.random(n) < spec.awake_prob
            awake_sets.append(AwakeSet(tuple(np.flatnonzero(mask)), n))
    return LossHistory(n, awake_sets, losses)


def generate_lower_bound(spec: LowerBoundEnvSpec) -> tuple[LossHistory, int]:
    """Sample the lower-bound construction; returns the history and the good expert."""
    n, t = spec.n_experts, spec.effective_horizon
    if spec.i_star is None:
        i_star = int(_rng(spec.seed, _ISTAR_STREAM).integers(n))
    else:
        i_star = int(spec.i_star)
    means = np.full(n, 0.5 + spec.eps_gap)
    means[i_star] = 0.5 - spec.eps_gap
    losses = (_rng(spec.seed, _LOSS_STREAM).random((t, n)) < means).astype(float)
    return LossHistory(n, [AwakeSet.full(n)] * t, losses), i_star


def variance_budget_probe(trial: TrialLog) -> float:
    """(1/4 - eps**2) * sum_t (1 - sum_i p_t(i)**2) for a lower-bound trial.

    This is the conditional-expectation lower bound on the trial's total
    variance under the gap-eps construction; it is reported next to the
    realized total rather than asserted pointwise.
    """
    info = trial.env_info
    if info.get("kind") != "lower_bound":
        raise ValueError("variance_budget_probe requires a lower-bound environment trial")
    eps = float(info["eps_gap"])
    spread = 1.0 - np.sum(trial.played**2, axis=1)
    return float((0.25 - eps**2) * spread.sum())


def save_scripted(history: LossHistory, path) -> None:
    """Write a history in the line-oriented scripted format.

    Header ``N=<int> T=<int>``, then one line per round:
    ``awake=<indices>; losses=<values aligned with awake>``.  Only awake
    losses are serialized; floats use shortest round-trip notation.
    """
    lines = [f"N={history.n_experts} T={history.horizon}"]
    for awake, row in history.rounds():
        idx = ",".join(str(i) for i in awake.members)
        vals = ",".join(repr(float(v)) for v in row[awake.indices])
        lines.append(f"awake={idx}; losses={vals}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_round_line(line: str, lineno: int, n: int) -> tuple[list[int], list[float]]:
    parts = [p.strip() for p in line.split(";")]
    if len(parts) != 2 or not parts[0].startswith("awake=") or not parts[1].startswith("losses="):
        raise ScriptedFormatError(
            f"line {lineno}: expected 'awake=<indices>; losses=<values>', got {line!r}"
        )
    awake_text = parts[0][len("awake="):].strip()
    loss_text = parts[1][len("losses="):].strip()
    if not awake_text:
        raise ScriptedFormatError(f"line {lineno}: empty awake set")
    try:
        awake = [int(x) for x in awake_text.split(",")]
    except ValueError as exc:
        raise ScriptedFormatError(f"line {lineno}: bad awake index ({exc})") from None
    try:
        losses = [float(x) for x in loss_text.split(",")] if loss_text else []
    except ValueError as exc:
        raise ScriptedFormatError(f"line {lineno}: bad loss value ({exc})") from None
    if len(losses) != len(awake):
        raise ScriptedFormatError(
            f"line {lineno}: {len(awake)} awake indices but {len(losses)} losses"
        )
    for i in awake:
        if not 0 <= i < n:
            raise ScriptedFormatError(f"line {lineno}: expert {i} out of range [0, {n})")
    if len(set(awake)) != len(awake):
        raise ScriptedFormatError(f"line {lineno}: duplicate awake index")
    for i, v in zip(awake, losses):
        if not (math.isfinite(v) and 0.0 <= v <= 1.0):
            raise ScriptedFormatError(f"line {lineno}: loss for expert {i} outside [0, 1]: {v!r}")
    return awake, losses


def load_scripted(path) -> ScriptedEnv:
    """Load a scripted history; errors carry 1-based line numbers."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    lines = [(no + 1, text.strip()) for no, text in enumerate(raw)]
    lines = [(no, text) for no, text in lines if text and not text.startswith("#")]
    if not lines:
        raise ScriptedFormatError("empty file: missing 'N=<int> T=<int>' header")
    head_no, head = lines[0]
    tokens = head.split()
    if len(tokens) != 2 or not tokens[0].startswith("N=") or not tokens[1].startswith("T="):
        raise ScriptedFormatError(f"line {head_no}: expected header 'N=<int> T=<int>', got {head!r}")
    try:
        n = int(tokens[0][2:])
        t = int(tokens[1][2:])
    except ValueError:
        raise ScriptedFormatError(f"line {head_no}: non-integer N or T in header") from None
    if n < 1:
        raise ScriptedFormatError(f"line {head_no}: N must be >= 1")
    if t < 1:
        raise ScriptedFormatError(f"line {head_no}: horizon must be >= 1")
    body = lines[1:]
    if len(body) != t:
        raise ScriptedFormatError(f"header declares T={t} rounds but file has {len(body)}")
    awake_sets: list[AwakeSet] = []
    losses = np.full((t, n), np.nan)
    for r, (no, text) in enumerate(body):
        awake, vals = _parse_round_line(text, no, n)
        awake_sets.append(AwakeSet(tuple(awake), n))
        losses[r, awake] = vals
    history = LossHistory(n, awake_sets, losses)
    return ScriptedEnv(history=history, source=str(path))
