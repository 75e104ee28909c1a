"""Alternating optimization of the max-min multicast precoder.

Each iteration refreshes the MMSE equalizers and reciprocal-MSE weights at
the current precoder, then solves the convex update of
:mod:`rsmcast.subproblem`. The surrogate objective is non-decreasing across
iterations and the loop stops once its successive difference falls below a
threshold. Reported rates are always re-evaluated with the exact rate
formulas at the final precoder; the shared-stream capacity left over after
the broadcast threshold is redistributed over the per-group refunds by
water-filling, which maximizes the reported max-min value without touching
the precoder.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import metrics, subproblem
from .errors import AllInfeasibleError, SchemeHasNoAlphaError
from .model import (
    ALPHA_MAX,
    ALPHA_MIN,
    ChannelRealization,
    GroupLayout,
    Mode,
    PrecoderSet,
    RateAllocation,
    Scheme,
    transmit_power,
)
from .subproblem import SubproblemStatus

log = logging.getLogger(__name__)

DEFAULT_ALPHA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))


class InitStrategy(Enum):
    SEEDED_RANDOM = "seeded-random"
    MATCHED_FILTER = "matched-filter"


class SolveStatus(Enum):
    OK = "Ok"
    INFEASIBLE = "Infeasible"
    MAX_ITERS = "MaxItersReached"


@dataclass(frozen=True)
class AoConfig:
    """Knobs of the alternating loop.

    ``epsilon`` bounds the successive surrogate-objective difference at which
    the loop stops; ``alpha_grid`` is the candidate set for the SC/MC power
    split; ``init_seed`` feeds the seeded-random initializer.
    """

    epsilon: float = 1e-4
    max_iters: int = 500
    init_strategy: InitStrategy = InitStrategy.SEEDED_RANDOM
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    init_seed: int = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if any(not (ALPHA_MIN <= a <= ALPHA_MAX) for a in self.alpha_grid):
            raise ValueError(f"alpha grid entries must lie in [{ALPHA_MIN}, {ALPHA_MAX}]")


@dataclass
class SolveResult:
    """Converged precoder with exact rates and the per-iteration surrogate trace."""

    precoder: PrecoderSet | None
    rates: RateAllocation | None
    trace: list[float]
    iterations: int
    converged: bool
    status: SolveStatus

    @property
    def mmf_rate(self) -> float:
        return self.rates.mmf_rate if self.rates is not None else float("nan")


def initialize_precoder(ch: ChannelRealization, layout: GroupLayout, scheme: Scheme,
                        alpha: float | None, tx_budget: float,
                        strategy: InitStrategy = InitStrategy.SEEDED_RANDOM,
                        seed: int = 0) -> PrecoderSet:
    """Starting precoder with the budget split equally across columns.

    Seeded-random draws i.i.d. complex Gaussian columns; matched-filter points
    each group column along its members' mean conjugate channel and the shared
    column (if any) along the all-user mean. Either way columns are normalized
    to an equal nominal share and then rescaled so the radiated power equals
    the budget exactly. Deterministic given the seed.
    """
    m = ch.n_antennas
    n_cols = scheme.n_columns(layout.n_groups)
    if tx_budget == 0:
        return PrecoderSet(scheme, np.zeros((m, n_cols), dtype=np.complex128),
                           tx_budget=0.0, alpha=alpha)

    if strategy is InitStrategy.SEEDED_RANDOM:
        rng = np.random.default_rng(seed)
        cols = rng.standard_normal((m, n_cols)) + 1j * rng.standard_normal((m, n_cols))
    else:
        cols = np.empty((m, n_cols), dtype=np.complex128)
        group_cols = []
        for k in range(layout.n_groups):
            members = list(layout.group_members(k))
            group_cols.append(ch.rows[members].conj().mean(axis=0))
        if scheme.has_shared_column:
            cols[:, 0] = ch.rows.conj().mean(axis=0)
            cols[:, 1:] = np.stack(group_cols, axis=1)
        else:
            cols[:] = np.stack(group_cols, axis=1)
        for j in range(n_cols):
            if np.linalg.norm(cols[:, j]) < 1e-12:
                cols[:, j] = np.eye(m, dtype=np.complex128)[:, 0]

    norms = np.linalg.norm(cols, axis=0)
    cols = cols / norms * np.sqrt(tx_budget / n_cols)
    p = PrecoderSet(scheme, cols, tx_budget=tx_budget, alpha=alpha)
    scale = np.sqrt(tx_budget / transmit_power(p))
    return PrecoderSet(scheme, cols * scale, tx_budget=tx_budget, alpha=alpha)


def _fill_common_pool(pool: float, floors: np.ndarray):
    """Split ``pool`` over per-group refunds to maximize min(refund + floor).

    Water-filling: raises the lowest groups to a common level. Returns the
    achieved max-min level and the refund vector.
    """
    order = np.sort(floors)
    k = len(order)
    level = order[0] + pool  # k == 1 case and fallback
    for i in range(k):
        cand = (pool + order[:i + 1].sum()) / (i + 1)
        if i == k - 1 or cand <= order[i + 1]:
            level = cand
            break
    refunds = np.maximum(level - floors, 0.0)
    return float(level), refunds


def finalize_rates(ch: ChannelRealization, layout: GroupLayout, p: PrecoderSet,
                   rc_threshold: float, mode: Mode) -> RateAllocation | None:
    """Exact rate allocation for a fixed precoder.

    Evaluates the decodability limits with the exact rate formulas, pins the
    broadcast rate to its threshold, and (RS only) water-fills the leftover
    shared-stream capacity over the per-group refunds. The threshold counts
    as met within 1e-4 bits (the threshold constraint is typically active, so
    interior-point feasibility slack can undercut it by a few 1e-6); beyond
    that the allocation is reported as unsupported (None).
    """
    shared_min, floors = metrics.min_rates(ch, p, layout)
    pool = shared_min - rc_threshold
    if pool < -1e-4:
        return None
    pool = max(pool, 0.0)
    if mode is Mode.RS:
        level, refunds = _fill_common_pool(pool, floors)
    else:
        level, refunds = float(floors.min()), np.zeros(layout.n_groups)
    return RateAllocation(
        common_rate=float(rc_threshold),
        group_common_rates=refunds,
        group_private_rates=floors,
        mmf_rate=level,
    )


def _raise_common_floor(ch, layout, scheme, alpha, tx_budget, target, config,
                        p: PrecoderSet) -> PrecoderSet | None:
    """Feasibility restoration: alternate on the worst-user shared-stream
    bound until it clears ``target``.

    A poorly matched starting precoder can make the threshold unreachable for
    the first frozen receiver state even when the true problem is feasible.
    This phase maximizes the surrogate shared rate (which never overestimates
    the exact one) and stops as soon as the exact worst-user shared rate
    clears the target. Returns None when the restoration converges short of
    it, i.e. the threshold looks genuinely unsupportable.
    """
    kernel = subproblem.ConicSubproblem(
        ch, layout, metrics.receiver_state(ch, p, layout), scheme, alpha,
        tx_budget, 0.0, Mode.NORS, objective="common")
    prev = -np.inf
    for it in range(1, config.max_iters + 1):
        if it > 1:
            kernel.set_receivers(metrics.receiver_state(ch, p, layout))
        sol = subproblem.solve(kernel)
        if sol.status is not SubproblemStatus.OPTIMAL:
            return None
        p = sol.precoder
        exact_floor, _ = metrics.min_rates(ch, p, layout)
        if exact_floor >= target + 1e-6:
            return p
        if abs(sol.objective - prev) <= config.epsilon:
            return p if exact_floor >= target else None
        prev = sol.objective
    return None


def run_ao(ch: ChannelRealization, layout: GroupLayout, scheme: Scheme,
           alpha: float | None, tx_budget: float, rc_threshold: float = 0.0,
           mode: Mode = Mode.RS, config: AoConfig = AoConfig()) -> SolveResult:
    """Alternate equalizer/weight refreshes with convex precoder updates.

    The first update is always solved; afterwards the loop stops when the
    surrogate objective moves by at most ``config.epsilon``, returning exact
    rates at the best iterate. When the first update is cut off by the
    broadcast threshold, a feasibility-restoration phase first drives the
    worst-user shared-stream bound above the threshold; a run is reported
    infeasible only if that restoration falls short (threshold beyond what
    the power budget supports).
    """
    p = initialize_precoder(ch, layout, scheme, alpha, tx_budget,
                            config.init_strategy, config.init_seed)
    kernel = subproblem.assemble(ch, layout, metrics.receiver_state(ch, p, layout),
                                 scheme, alpha, tx_budget, rc_threshold, mode)
    trace: list[float] = []
    prev = 0.0
    best_obj = -np.inf
    best_p = None
    converged = False
    for it in range(1, config.max_iters + 1):
        if it > 1:
            kernel.set_receivers(metrics.receiver_state(ch, p, layout))
        sol = subproblem.solve(kernel)
        if (sol.status is not SubproblemStatus.OPTIMAL and it == 1
                and rc_threshold > 0):
            restored = _raise_common_floor(ch, layout, scheme, alpha, tx_budget,
                                           rc_threshold, config, p)
            if restored is not None:
                log.info("threshold unreachable at the initial receiver state; "
                         "recovered via feasibility restoration")
                p = restored
                kernel.set_receivers(metrics.receiver_state(ch, p, layout))
                sol = subproblem.solve(kernel)
        if sol.status is SubproblemStatus.INFEASIBLE:
            if it > 1:  # cannot happen in exact arithmetic: previous iterate stays feasible
                log.warning("subproblem became infeasible at iteration %d", it)
            return SolveResult(None, None, [], 0, False, SolveStatus.INFEASIBLE)
        if sol.status is SubproblemStatus.NUMERICAL_TROUBLE:
            log.warning("subproblem solver failed at iteration %d; keeping best iterate", it)
            if best_p is None:
                return SolveResult(None, None, [], 0, False, SolveStatus.INFEASIBLE)
            break
        p = sol.precoder
        trace.append(sol.objective)
        if sol.objective > best_obj:
            best_obj, best_p = sol.objective, p
        if abs(sol.objective - prev) <= config.epsilon:
            converged = True
            break
        prev = sol.objective
    else:
        log.warning("alternating loop hit max_iters=%d (last delta %.3g)",
                    config.max_iters,
                    abs(trace[-1] - trace[-2]) if len(trace) > 1 else float("nan"))

    status = SolveStatus.OK if converged else SolveStatus.MAX_ITERS
    rates = finalize_rates(ch, layout, best_p, rc_threshold, mode)
    if rates is None:
        log.warning("exact shared-stream limit fell short of the threshold; "
                    "reporting the run as infeasible")
        return SolveResult(None, None, trace, len(trace), False, SolveStatus.INFEASIBLE)
    return SolveResult(best_p, rates, trace, len(trace), converged, status)


def optimize_alpha(ch: ChannelRealization, layout: GroupLayout, scheme: Scheme,
                   tx_budget: float, rc_threshold: float = 0.0, mode: Mode = Mode.RS,
                   config: AoConfig = AoConfig()):
    """Grid search over the SC/MC power split, one alternating run per point.

    All runs share the configured init seed. Returns ``(alpha, result)`` for
    the largest exact max-min rate among converged runs (falling back to
    non-converged runs, with a warning, only if nothing converged); ties break
    toward the smaller split. Raises :class:`SchemeHasNoAlphaError` for CC and
    :class:`AllInfeasibleError` when every grid point is infeasible.
    """
    if not scheme.uses_power_split:
        raise SchemeHasNoAlphaError("CC carries the shared stream on its own column; "
                                    "there is no power split to optimize")
    if not config.alpha_grid:
        raise ValueError("alpha grid must be non-empty")
    best: tuple[float, SolveResult] | None = None
    fallback: tuple[float, SolveResult] | None = None
    for a in config.alpha_grid:
        res = run_ao(ch, layout, scheme, a, tx_budget, rc_threshold, mode, config)
        if res.status is SolveStatus.INFEASIBLE:
            continue
        if res.converged:
            if best is None or res.mmf_rate > best[1].mmf_rate:
                best = (a, res)
        elif fallback is None or res.mmf_rate > fallback[1].mmf_rate:
            fallback = (a, res)
    if best is not None:
        return best
    if fallback is not None:
        log.warning("no power-split candidate converged; returning the best "
                    "non-converged run (alpha=%.3g)", fallback[0])
        return fallback
    raise AllInfeasibleError(
        f"threshold {rc_threshold} infeasible at every power split in the grid"
    )


def with_seed(config: AoConfig, seed: int) -> AoConfig:
    """Copy of the config with a different initializer seed."""
    return replace(config, init_seed=int(seed))
