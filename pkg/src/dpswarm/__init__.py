"""Differentially private swarm-intelligence optimization for linear regression.

A user holding a sensitive dataset and an outsourcer running a swarm
cooperate; the user picks each personal best with the exponential mechanism
so the swarm only ever sees epsilon-DP information.
"""
from .behaviors import (
    KINDS,
    BehaviorSpec,
    SwarmState,
    cpso_step,
    gwo_step,
    init_swarm,
    pso_step,
    soa_step,
    spso_step,
    step,
    update_gbest,
    woa_step,
)
from .core import Bounds, ConfigurationError, DomainError, RngStream, StateError, clamp, fork_stream
from .data import FoldPlan, LoadError, RawTable, denormalize, kfold, load_csv, normalize, synth_linear
from .experiment import ExperimentConfig, ResultRecord, emit_plot_data, run_experiment, summarize
from .objective import Dataset, mse_objective, rmse, score, sensitivity_bound
from .privacy import (
    BudgetExhaustedError,
    BudgetLedger,
    SelectionOutcome,
    allocate,
    dp_update_pbest,
    exp_mech_select,
    greedy_update_pbest,
)
from .protocol import (
    EvaluationReply,
    EvaluationRequest,
    ParseError,
    ProtocolError,
    RunAbortedError,
    RunConfig,
    RunResult,
    parse_message,
    run,
    serialize_message,
)

__version__ = "0.1.0"
