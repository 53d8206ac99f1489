"""Numerical replay of the non-analyticity arguments and consistency checks."""

from .envelope import (
    EnvelopeCertificate,
    EnvelopeCheck,
    KChoice,
    choose_K,
    choose_K_checked,
    envelope_check,
    envelope_constants,
    g_log,
    g_log_ratio,
    g_ratio_law,
)
from .replay import (
    DominanceResult,
    GrowthRow,
    LowerBoundResult,
    ProofReplayRecord,
    analytic_floor_log,
    choose_mN,
    choose_mN_weps,
    dominance_check,
    find_N0,
    log_ratio_FN,
    lower_bound_check,
    replay_level,
    taylor_growth_scan,
    weight_FN,
    weps_precondition,
)
from .residual import ResidualReport, cell_grid, fd_budget, node_grid, per_term_identity, residual_check
from .walczak import WalczakCheck, walczak_hypothesis_check
