"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
report. The two Monte-Carlo reproductions (criteria 7 and 8) use 20 channel
realizations, a 9-point power-split grid, and reduced SNR grids spanning the
default range, to keep the suite inside its runtime budget; the qualitative
claims under test do not depend on that thinning.
"""

import dataclasses
import time

import numpy as np
import pytest

import rsmcast as rs
from conftest import draw_instance
from rsmcast import Mode, Scheme, SolveStatus, ao, metrics, oracle, subproblem

GRID9 = tuple(round(0.1 * i, 1) for i in range(1, 10))

OVERLOADED = rs.ExperimentConfig(
    n_antennas=2, group_sizes=(1, 2, 3),
    snr_grid_db=(20.0, 30.0), rc_threshold=0.3,
    realizations=20, master_seed=0,
    ao=rs.AoConfig(alpha_grid=GRID9, max_iters=2000), n_jobs=2,
)
UNDERLOADED = rs.ExperimentConfig(
    n_antennas=6, group_sizes=(1, 2, 3),
    snr_grid_db=(10.0, 20.0, 30.0), rc_threshold=0.5,
    realizations=20, master_seed=0,
    ao=rs.AoConfig(alpha_grid=GRID9, max_iters=2000), n_jobs=2,
)


def report(num, description, ok, detail=""):
    print(f"criterion {num:2d} [{'PASS' if ok else 'FAIL'}] {description}"
          + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {num}: {description} {detail}"


@pytest.fixture(scope="module")
def ascent_runs():
    """Criterion 5/6 workload: 20 seeded runs per scheme per mode at 20 dB."""
    start = time.time()
    layout = rs.build_group_layout((1, 2, 3))
    channels = rs.generate_channels(2, 6, 20, master_seed=7)
    results = {}
    for scheme in (Scheme.SC, Scheme.CC, Scheme.MC):
        for mode in (Mode.RS, Mode.NORS):
            for r in range(20):
                alpha = 0.5 if scheme.uses_power_split else None
                res = rs.run_ao(channels[r], layout, scheme, alpha, 100.0, 0.0,
                                mode, ao.with_seed(rs.AoConfig(), r))
                results[(scheme, mode, r)] = res
    print(f"\n[acceptance] 120 seeded runs finished in {time.time() - start:.0f}s")
    return results


@pytest.fixture(scope="module")
def overloaded_rows():
    start = time.time()
    rows = rs.run_experiment(OVERLOADED)
    print(f"\n[acceptance] overloaded sweep finished in {time.time() - start:.0f}s")
    return rows, rs.aggregate(rows)


@pytest.fixture(scope="module")
def underloaded_rows():
    start = time.time()
    rows = rs.run_experiment(UNDERLOADED)
    print(f"\n[acceptance] underloaded sweep finished in {time.time() - start:.0f}s")
    return rows, rs.aggregate(rows)


def _mean(aggs, scheme, mode, snr):
    for a in aggs:
        if (a.scheme, a.mode, a.snr_db) == (scheme, mode, snr):
            return a.mean_mmf_rate
    raise KeyError((scheme, mode, snr))


def test_criterion_01_rate_mmse_identity():
    start = time.time()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        h, p, user, layout = draw_instance(rng)
        b, c = rs.scheme_coefficients(p.scheme, p.alpha)
        rate0, ratep = metrics.user_rates(h, p, user, layout)
        eps0, epsp = metrics.mmse_values(h, p, user, layout)
        worst = max(worst, abs(-np.log2(eps0 / b) - rate0),
                    abs(-np.log2(epsp / c) - ratep))
    report(1, "rate equals -log2 of normalized minimum MSE on 1000 draws",
           worst <= 1e-10, f"worst |diff| = {worst:.2e}, {time.time() - start:.1f}s")


def test_criterion_02_wmse_duality():
    start = time.time()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        h, p, user, layout = draw_instance(rng)
        b, c = rs.scheme_coefficients(p.scheme, p.alpha)
        w, v = metrics.mmse_receivers(h, p, user, layout)
        wt, vt = metrics.optimal_weights(*metrics.mmse_values(h, p, user, layout))
        eps0, epsp = metrics.mse_values(h, p, user, layout, w, v)
        rate0, ratep = metrics.user_rates(h, p, user, layout)
        worst = max(worst,
                    abs(metrics.augmented_wmse(eps0, wt, b) - (1 - rate0)),
                    abs(metrics.augmented_wmse(epsp, vt, c) - (1 - ratep)))
    report(2, "augmented WMSE at closed-form receivers/weights equals 1 - rate",
           worst <= 1e-10, f"worst |diff| = {worst:.2e}, {time.time() - start:.1f}s")


def test_criterion_03_receiver_oracle_equivalence():
    start = time.time()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        h, p, user, layout = draw_instance(rng)
        w_ref, v_ref = metrics.mmse_receivers(h, p, user, layout)
        w, v = oracle.numeric_receiver(h, p, user, layout)
        worst = max(worst, abs(w - w_ref), abs(v - v_ref))
    report(3, "closed-form equalizers match the numeric minimizer on 100 draws",
           worst <= 1e-4, f"worst |diff| = {worst:.2e}, {time.time() - start:.1f}s")


def test_criterion_04_subproblem_and_end_to_end_oracles():
    start = time.time()
    layout = rs.build_group_layout([1])
    ch = rs.ChannelRealization(np.array([[1.0 + 0j]]))
    p = rs.PrecoderSet(Scheme.CC, np.full((1, 2), 1 / np.sqrt(2), dtype=complex),
                       tx_budget=1.0)
    rx = metrics.receiver_state(ch, p, layout)
    sol = subproblem.solve(subproblem.assemble(ch, layout, rx, Scheme.CC, None,
                                               1.0, 0.0, Mode.RS))
    grid = oracle.GridSpec(0.0, 1.0, 801)
    ref = oracle.grid_subproblem(ch, layout, rx, Scheme.CC, None, 1.0, 0.0, grid)
    sub_diff = abs(sol.objective - ref)

    res = rs.run_ao(ch, layout, Scheme.CC, None, 1.0, 0.0, Mode.RS,
                    rs.AoConfig(alpha_grid=(0.5,)))
    e2e_ref = oracle.grid_end_to_end(ch, layout, Scheme.CC, None, 1.0, 0.0, grid)
    e2e_diff = abs(res.rates.mmf_rate - e2e_ref)
    report(4, "solver matches exhaustive grids on the single-user instance",
           sub_diff <= 1e-3 and e2e_diff <= 1e-3,
           f"update |diff| = {sub_diff:.2e}, end-to-end |diff| = {e2e_diff:.2e}, "
           f"{time.time() - start:.1f}s")


def test_criterion_05_ascent(ascent_runs):
    worst = np.inf
    all_ok = True
    for res in ascent_runs.values():
        if res.status is not SolveStatus.OK:
            all_ok = False
            continue
        steps = np.diff(res.trace)
        if steps.size:
            worst = min(worst, steps.min())
    ok = all_ok and worst >= -1e-6
    report(5, "every iteration trace is non-decreasing over 120 seeded runs",
           ok, f"worst step = {worst:.2e}, all converged = {all_ok}")


def test_criterion_06_rs_dominance(ascent_runs):
    worst = np.inf
    for scheme in (Scheme.SC, Scheme.CC, Scheme.MC):
        for r in range(20):
            rs_rate = ascent_runs[(scheme, Mode.RS, r)].mmf_rate
            nors_rate = ascent_runs[(scheme, Mode.NORS, r)].mmf_rate
            worst = min(worst, rs_rate - nors_rate)
    report(6, "rate splitting never loses to its restriction per realization",
           worst >= -1e-4, f"worst RS - NoRS = {worst:.2e}")


def test_criterion_07_overloaded_reproduction(overloaded_rows):
    _, aggs = overloaded_rows
    details = []
    ok = True
    for scheme in (Scheme.SC, Scheme.CC, Scheme.MC):
        rs_gain = _mean(aggs, scheme, Mode.RS, 30.0) - _mean(aggs, scheme, Mode.RS, 20.0)
        nors_gain = (_mean(aggs, scheme, Mode.NORS, 30.0)
                     - _mean(aggs, scheme, Mode.NORS, 20.0))
        ok &= rs_gain >= 0.4 and nors_gain <= 0.2
        details.append(f"{scheme.value}: RS +{rs_gain:.2f}, NoRS +{nors_gain:.2f}")
    mc30 = _mean(aggs, Scheme.MC, Mode.RS, 30.0)
    cc30 = _mean(aggs, Scheme.CC, Mode.RS, 30.0)
    sc30 = _mean(aggs, Scheme.SC, Mode.RS, 30.0)
    ok &= mc30 >= cc30 - 0.05 and cc30 >= sc30 - 0.05
    details.append(f"30 dB order MC {mc30:.2f} / CC {cc30:.2f} / SC {sc30:.2f}")
    report(7, "overloaded system: NoRS saturates, RS keeps growing, MC >= CC >= SC",
           ok, "; ".join(details))


def test_criterion_08_underloaded_reproduction(underloaded_rows):
    _, aggs = underloaded_rows
    worst = 0.0
    for scheme in (Scheme.SC, Scheme.CC, Scheme.MC):
        for snr in UNDERLOADED.snr_grid_db:
            rs_mean = _mean(aggs, scheme, Mode.RS, snr)
            nors_mean = _mean(aggs, scheme, Mode.NORS, snr)
            worst = max(worst, abs(rs_mean - nors_mean) / rs_mean)
    report(8, "underloaded system: splitting and restriction nearly coincide",
           worst <= 0.05, f"worst relative gap = {worst:.3%}")


def test_criterion_09_common_rate_pinned(overloaded_rows, underloaded_rows):
    worst = 0.0
    n_ok = 0
    for rows, config in ((overloaded_rows[0], OVERLOADED), (underloaded_rows[0], UNDERLOADED)):
        for row in rows:
            if row.status is SolveStatus.OK:
                n_ok += 1
                worst = max(worst, abs(row.common_rate - config.rc_threshold))
    report(9, "broadcast rate sits at its threshold on every successful run",
           worst <= 1e-4 and n_ok > 0, f"worst |Rc - threshold| = {worst:.2e} over {n_ok} rows")


def test_criterion_10_determinism(tmp_path):
    config = dataclasses.replace(
        OVERLOADED, schemes=(Scheme.CC, Scheme.SC), snr_grid_db=(15.0,),
        realizations=3, ao=rs.AoConfig(alpha_grid=(0.4, 0.6)))
    rows_a = rs.run_experiment(config)
    raw_a, agg_a = rs.emit_csv(rows_a, rs.aggregate(rows_a), tmp_path / "a")
    rows_b = rs.run_experiment(dataclasses.replace(config, n_jobs=1))
    raw_b, agg_b = rs.emit_csv(rows_b, rs.aggregate(rows_b), tmp_path / "b")
    same = (raw_a.read_bytes() == raw_b.read_bytes()
            and agg_a.read_bytes() == agg_b.read_bytes())
    report(10, "identical configs emit byte-identical CSVs across worker counts", same)
