"""Monte-Carlo experiment orchestration and CSV reporting.

Sweeps (scheme, mode, SNR, realization) over an ensemble of i.i.d. unit
variance complex Gaussian channels, running the power-split search for SC/MC
and a single alternating solve for CC, then writes one raw row per run plus
per-curve aggregates. Every random stream is derived from the master seed
and the run's logical coordinates, so results are reproducible and
independent of execution order, including under parallel execution.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import ao
from .errors import AllInfeasibleError
from .model import ChannelRealization, GroupLayout, Mode, Scheme, build_group_layout

log = logging.getLogger(__name__)

RAW_HEADER = ("scheme", "mode", "snr_db", "alpha", "realization",
              "mmf_rate", "common_rate", "iterations", "converged", "status")
AGGREGATE_HEADER = ("scheme", "mode", "snr_db", "mean_mmf_rate", "stddev",
                    "n_ok", "n_infeasible")

_SCHEME_RANK = {Scheme.SC: 0, Scheme.CC: 1, Scheme.MC: 2}
_MODE_RANK = {Mode.RS: 0, Mode.NORS: 1}


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one sweep; identical configs give identical CSVs."""

    n_antennas: int
    group_sizes: tuple[int, ...]
    schemes: tuple[Scheme, ...] = (Scheme.SC, Scheme.CC, Scheme.MC)
    modes: tuple[Mode, ...] = (Mode.RS, Mode.NORS)
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    rc_threshold: float = 0.0
    realizations: int = 100
    master_seed: int = 0
    ao: ao.AoConfig = ao.AoConfig()
    n_jobs: int = 1

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("need at least one channel realization")
        if not self.snr_grid_db:
            raise ValueError("SNR grid must be non-empty")
        if self.master_seed < 0:
            raise ValueError("master seed must be non-negative")


@dataclass
class ResultRow:
    """One (scheme, mode, snr, realization) outcome."""

    scheme: Scheme
    mode: Mode
    snr_db: float
    alpha: float | None
    realization: int
    mmf_rate: float | None
    common_rate: float | None
    iterations: int
    converged: bool
    status: ao.SolveStatus


@dataclass
class AggregateRow:
    """Per-curve summary over the successful realizations."""

    scheme: Scheme
    mode: Mode
    snr_db: float
    mean_mmf_rate: float | None
    stddev: float | None
    n_ok: int
    n_infeasible: int


def generate_channels(n_antennas: int, n_users: int, count: int,
                      master_seed: int) -> list[ChannelRealization]:
    """i.i.d. unit-variance circularly-symmetric Gaussian channel ensemble.

    Realization ``r`` draws from a stream seeded by ``(master_seed, r)``, so
    individual realizations are reproducible in isolation.
    """
    out = []
    for r in range(count):
        rng = np.random.default_rng([master_seed, r])
        rows = (rng.standard_normal((n_users, n_antennas))
                + 1j * rng.standard_normal((n_users, n_antennas))) / np.sqrt(2.0)
        out.append(ChannelRealization(rows))
    return out


def snr_db_to_budget(snr_db: float) -> float:
    """Transmit budget in linear units; with unit noise this is the SNR."""
    return float(10.0 ** (snr_db / 10.0))


def _run_seed(master_seed, scheme, mode, snr_index, realization) -> int:
    ss = np.random.SeedSequence([master_seed, _SCHEME_RANK[scheme],
                                 _MODE_RANK[mode], snr_index, realization])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_one(ch: ChannelRealization, layout: GroupLayout, scheme: Scheme, mode: Mode,
             snr_db: float, realization: int, seed: int, rc_threshold: float,
             base: ao.AoConfig) -> ResultRow:
    budget = snr_db_to_budget(snr_db)
    config = ao.with_seed(base, seed)
    alpha_star: float | None = None
    if scheme.uses_power_split:
        try:
            alpha_star, res = ao.optimize_alpha(ch, layout, scheme, budget,
                                                rc_threshold, mode, config)
        except AllInfeasibleError:
            res = ao.SolveResult(None, None, [], 0, False, ao.SolveStatus.INFEASIBLE)
    else:
        res = ao.run_ao(ch, layout, scheme, None, budget, rc_threshold, mode, config)
    ok = res.rates is not None
    return ResultRow(
        scheme=scheme,
        mode=mode,
        snr_db=float(snr_db),
        alpha=alpha_star,
        realization=realization,
        mmf_rate=res.rates.mmf_rate if ok else None,
        common_rate=res.rates.common_rate if ok else None,
        iterations=res.iterations,
        converged=res.converged,
        status=res.status,
    )


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Run the full sweep and return one row per (scheme, mode, snr, realization).

    Per-row failures (infeasible threshold, non-convergence) are recorded in
    the row status and never abort the sweep. With ``n_jobs != 1`` the rows
    are computed in parallel; results are identical to a sequential run.
    """
    layout = build_group_layout(config.group_sizes)
    channels = generate_channels(config.n_antennas, layout.n_users,
                                 config.realizations, config.master_seed)
    tasks = []
    for scheme in config.schemes:
        for mode in config.modes:
            for snr_index, snr_db in enumerate(config.snr_grid_db):
                for r in range(config.realizations):
                    seed = _run_seed(config.master_seed, scheme, mode, snr_index, r)
                    tasks.append((channels[r], layout, scheme, mode, snr_db, r,
                                  seed, config.rc_threshold, config.ao))
    if config.n_jobs == 1:
        rows = [_run_one(*t) for t in tasks]
    else:
        rows = Parallel(n_jobs=config.n_jobs)(delayed(_run_one)(*t) for t in tasks)

    n_inf = sum(1 for row in rows if row.status is ao.SolveStatus.INFEASIBLE)
    n_maxed = sum(1 for row in rows if row.status is ao.SolveStatus.MAX_ITERS)
    if n_inf:
        log.warning("%d of %d runs infeasible (excluded from curve means)", n_inf, len(rows))
    if n_maxed:
        log.warning("%d of %d runs stopped at the iteration cap", n_maxed, len(rows))
    return rows


def aggregate(rows) -> list[AggregateRow]:
    """Per-curve mean and sample spread of the max-min rate over Ok rows."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.scheme, row.mode, row.snr_db), []).append(row)
    out = []
    for (scheme, mode, snr_db), members in sorted(
            groups.items(),
            key=lambda kv: (_SCHEME_RANK[kv[0][0]], _MODE_RANK[kv[0][1]], kv[0][2])):
        ok = [m.mmf_rate for m in members if m.status is ao.SolveStatus.OK]
        n_inf = sum(1 for m in members if m.status is ao.SolveStatus.INFEASIBLE)
        if ok:
            mean = float(np.mean(ok))
            std = float(np.std(ok, ddof=1)) if len(ok) > 1 else 0.0
        else:
            mean = std = None
        out.append(AggregateRow(scheme, mode, snr_db, mean, std, len(ok), n_inf))
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def emit_csv(rows, aggregates, out_dir) -> tuple[Path, Path]:
    """Write ``results.csv`` (raw rows) and ``aggregate.csv`` under ``out_dir``.

    Rows are sorted by (scheme, mode, snr, realization) and numbers rendered
    with 10 significant digits, so reruns of the same config produce
    byte-identical files.
    """
    if not rows:
        raise ValueError("no rows to write")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    raw_path = out_dir / "results.csv"
    agg_path = out_dir / "aggregate.csv"

    ordered = sorted(rows, key=lambda r: (_SCHEME_RANK[r.scheme], _MODE_RANK[r.mode],
                                          r.snr_db, r.realization))
    with open(raw_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RAW_HEADER)
        for r in ordered:
            writer.writerow([
                r.scheme.value, r.mode.value, _fmt(r.snr_db), _fmt(r.alpha),
                r.realization, _fmt(r.mmf_rate), _fmt(r.common_rate),
                r.iterations, _fmt(r.converged), r.status.value,
            ])
    with open(agg_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_HEADER)
        for a in aggregates:
            writer.writerow([
                a.scheme.value, a.mode.value, _fmt(a.snr_db),
                _fmt(a.mean_mmf_rate), _fmt(a.stddev), a.n_ok, a.n_infeasible,
            ])
    return raw_path, agg_path
