"""Shared fixtures: random instance builders and the multi-environment sweep."""

from __future__ import annotations

import numpy as np
import pytest

from riplm import AwakeSet, LossHistory, save_scripted
from riplm.harness import config_from_dict, run_experiment

SWEEP_SEEDS = tuple(range(1, 51))
SWEEP_SIZES = (2, 4, 8)
SWEEP_HORIZON = 1000


def random_awake(rng: np.random.Generator, n: int) -> AwakeSet:
    size = int(rng.integers(1, n + 1))
    members = rng.choice(n, size=size, replace=False)
    return AwakeSet(tuple(int(i) for i in members), n)


def random_history(
    rng: np.random.Generator, n: int, t: int, always_awake: bool = False
) -> LossHistory:
    losses = rng.random((t, n))
    if always_awake:
        awake = [AwakeSet.full(n)] * t
    else:
        awake = [random_awake(rng, n) for _ in range(t)]
    return LossHistory(n, awake, losses)


def scripted_history(n: int, t: int) -> LossHistory:
    """Deterministic partial-availability pattern with rational losses."""
    losses = np.empty((t, n))
    awake_sets = []
    for r in range(t):
        for i in range(n):
            losses[r, i] = ((r + 1) * (i + 1) % 101) / 100.0
        members = [i for i in range(n) if (r + i) % 3 != 0]
        if not members:
            members = [r % n]
        awake_sets.append(AwakeSet(tuple(members), n))
    return LossHistory(n, awake_sets, losses)


def _sweep_config(env_kind: str, n: int, scripted_path=None) -> dict:
    if env_kind == "stochastic":
        env = {
            "kind": "stochastic",
            "means": [float(m) for m in np.linspace(0.1, 0.9, n)],
            "horizon": SWEEP_HORIZON,
        }
    elif env_kind == "lower_bound":
        env = {
            "kind": "lower_bound",
            "n_experts": n,
            "eps_gap": 0.125,
            "horizon": SWEEP_HORIZON,
        }
    else:
        env = {"kind": "scripted", "path": str(scripted_path)}
    return {
        "environment": env,
        "algorithm": {"kind": "riplm"},
        "run": {"seeds": list(SWEEP_SEEDS), "diagnostics": []},
    }


@pytest.fixture(scope="session")
def acceptance_sweep(tmp_path_factory):
    """50 seeds x {stochastic, lower_bound, scripted} x N in {2, 4, 8}, T = 1000."""
    base = tmp_path_factory.mktemp("sweep")
    logs = {}
    for n in SWEEP_SIZES:
        script = base / f"scripted_{n}.txt"
        save_scripted(scripted_history(n, SWEEP_HORIZON), script)
        for env_kind in ("stochastic", "lower_bound", "scripted"):
            cfg = config_from_dict(_sweep_config(env_kind, n, scripted_path=script))
            logs[(env_kind, n)] = run_experiment(cfg)
    return logs
