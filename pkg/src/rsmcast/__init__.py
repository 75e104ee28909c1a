"""Max-min fair precoding for multi-group multicasting with a shared broadcast
stream, via alternating WMSE optimization over three transmit constructions."""

from .ao import (
    AoConfig,
    DEFAULT_ALPHA_GRID,
    InitStrategy,
    SolveResult,
    SolveStatus,
    finalize_rates,
    initialize_precoder,
    optimize_alpha,
    run_ao,
)
from .estimator import MaxMinPrecoder
from .harness import (
    AggregateRow,
    ExperimentConfig,
    ResultRow,
    aggregate,
    emit_csv,
    generate_channels,
    run_experiment,
    snr_db_to_budget,
)
from .model import (
    ChannelRealization,
    GroupLayout,
    Mode,
    PrecoderSet,
    RateAllocation,
    ReceiverState,
    Scheme,
    aggregate_precoder,
    build_group_layout,
    scheme_coefficients,
    transmit_power,
)
from .subproblem import ConicSubproblem, SubproblemSolution, SubproblemStatus, assemble, solve

__version__ = "0.1.0"

__all__ = [
    "AggregateRow",
    "AoConfig",
    "ChannelRealization",
    "ConicSubproblem",
    "DEFAULT_ALPHA_GRID",
    "ExperimentConfig",
    "GroupLayout",
    "InitStrategy",
    "MaxMinPrecoder",
    "Mode",
    "PrecoderSet",
    "RateAllocation",
    "ReceiverState",
    "ResultRow",
    "Scheme",
    "SolveResult",
    "SolveStatus",
    "SubproblemSolution",
    "SubproblemStatus",
    "aggregate",
    "aggregate_precoder",
    "assemble",
    "build_group_layout",
    "emit_csv",
    "finalize_rates",
    "generate_channels",
    "initialize_precoder",
    "optimize_alpha",
    "run_ao",
    "run_experiment",
    "scheme_coefficients",
    "snr_db_to_budget",
    "solve",
    "transmit_power",
]
