"""Sleeping-experts online learning with rank-induced Plackett-Luce play.

Library surface:

  pl_core       restricted softmax, its inverse, rank-induced distributions,
                comparator restriction and smoothing
  learner       the adaptive mirror-descent learner (play / sample / update)
  baselines     awake-restricted exponential weights and uniform play
  benchmarks    exact and heuristic rank benchmarks, distributional losses
  variance      variance ledgers and the diagnostic inequalities
  environments  stochastic, gap, and file-scripted loss generators
  harness       config-driven multi-seed runner, diagnostics, CSV emission
  plotting      optional figure rendering from emitted CSVs
"""

from .baselines import HedgeLearner, UniformLearner, uniform_play
from .benchmarks import (
    BenchmarkResult,
    best_single_expert,
    distributional_loss,
    empirical_pl_rank_gap,
    pl_rank_gap_bound,
    rank_benchmark_exhaustive,
    rank_benchmark_heuristic,
    rank_benchmark_prefixes,
    ranking_value,
    regret,
)
from .environments import (
    LowerBoundEnvSpec,
    ScriptedEnv,
    ScriptedFormatError,
    StochasticEnvSpec,
    generate_lower_bound,
    generate_stochastic,
    load_scripted,
    save_scripted,
    variance_budget_probe,
)
from .harness import (
    AlgorithmConfig,
    ConfigError,
    DiagnosticCheck,
    DiagnosticReport,
    ExperimentConfig,
    config_from_dict,
    emit_results,
    load_config,
    run_diagnostics,
    run_experiment,
    run_trial,
)
from .history import LossHistory
from .learner import (
    HyperParams,
    RiplmLearner,
    RoundOutcome,
    sample,
    sample_many,
    surrogate_gradient,
)
from .pl_core import (
    AwakeSet,
    Distribution,
    Ranking,
    Temperature,
    log_partition,
    pl_from_ranking_at_temperature,
    rank_induced_distribution,
    restrict_comparator,
    restricted_softmax,
    scores_from_distribution,
    smooth_comparator,
    uniform_distribution,
)
from .trial import TrialLog
from .variance import (
    BoundReport,
    VarianceLedger,
    bregman_kl_check,
    max_round_variance,
    regret_bound_report,
    round_variance,
    second_bound_check,
    telescoping_check,
)

__version__ = "0.1.0"
