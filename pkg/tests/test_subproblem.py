
import numpy as np
import pytest

import rsmcast
from conftest import draw_channel
from rsmcast import (
    ChannelRealization,
    Mode,
    PrecoderSet,
    ReceiverState,
    Scheme,
    build_group_layout,
    scheme_coefficients,
    transmit_power,
)
from rsmcast import ao, metrics, oracle, subproblem
from rsmcast.subproblem import SubproblemStatus

LAYOUT1 = build_group_layout([1])
CH1 = ChannelRealization(np.array([[1.0 + 0j]]))


def mmse_state(ch, p, layout):
    return metrics.receiver_state(ch, p, layout)


def cc_unit_state():
    p = PrecoderSet(Scheme.CC, np.full((1, 2), 1 / np.sqrt(2), dtype=complex), tx_budget=1.0)
    return p, mmse_state(CH1, p, LAYOUT1)


class TestAssembly:
    def test_single_user_problem_size(self):
        _, rx = cc_unit_state()
        sp = subproblem.assemble(CH1, LAYOUT1, rx, Scheme.CC, None, 1.0, 0.0, Mode.RS)
        assert sp.n_cols == 2          # one complex column pair for M=1
        assert sp.num_rate_variables == 4
        assert sp.num_constraints == 5

    def test_nors_adds_equality_pins(self):
        _, rx = cc_unit_state()
        sp = subproblem.assemble(CH1, LAYOUT1, rx, Scheme.CC, None, 1.0, 0.0, Mode.NORS)
        assert sp.num_constraints == 6

    def test_zero_point_feasible_with_inactive_receivers(self):
        # zero equalizers with reciprocal-coefficient weights admit only the
        # zero allocation, so the solve must succeed with value zero
        for scheme, alpha in ((Scheme.CC, None), (Scheme.SC, 0.5), (Scheme.MC, 0.5)):
            b, c = scheme_coefficients(scheme, alpha)
            rx = ReceiverState(np.zeros(1, complex), np.zeros(1, complex),
                               np.array([1 / b]), np.array([1 / c]))
            sp = subproblem.assemble(CH1, LAYOUT1, rx, scheme, alpha, 1.0, 0.0, Mode.RS)
            sol = subproblem.solve(sp)
            assert sol.status is SubproblemStatus.OPTIMAL
            assert sol.objective == pytest.approx(0.0, abs=1e-6)

    def test_dimension_checks(self):
        _, rx = cc_unit_state()
        bad_ch = ChannelRealization(np.ones((2, 1)))
        with pytest.raises(rsmcast.errors.DimensionMismatchError):
            subproblem.assemble(bad_ch, LAYOUT1, rx, Scheme.CC, None, 1.0, 0.0, Mode.RS)


class TestSolve:
    def test_zero_power_is_optimal_zero(self):
        # receiver state consistent with the zero iterate, as in the loop
        p0 = PrecoderSet(Scheme.CC, np.zeros((1, 2), dtype=complex), tx_budget=0.0)
        rx = mmse_state(CH1, p0, LAYOUT1)
        sp = subproblem.assemble(CH1, LAYOUT1, rx, Scheme.CC, None, 0.0, 0.0, Mode.RS)
        sol = subproblem.solve(sp)
        assert sol.status is SubproblemStatus.OPTIMAL
        assert sol.objective == pytest.approx(0.0, abs=1e-7)
        np.testing.assert_allclose(sol.precoder.columns, 0, atol=1e-6)

    def test_unreachable_threshold_is_infeasible(self):
        _, rx = cc_unit_state()
        sp = subproblem.assemble(CH1, LAYOUT1, rx, Scheme.CC, None, 1.0, 50.0, Mode.RS)
        assert subproblem.solve(sp).status is SubproblemStatus.INFEASIBLE

    def test_power_budget_respected(self, rng):
        layout = build_group_layout([1, 2])
        ch = draw_channel(rng, 3, 2)
        for scheme in (Scheme.SC, Scheme.CC, Scheme.MC):
            alpha = 0.35 if scheme.uses_power_split else None
            p0 = ao.initialize_precoder(ch, layout, scheme, alpha, 5.0, seed=1)
            sp = subproblem.assemble(ch, layout, mmse_state(ch, p0, layout),
                                     scheme, alpha, 5.0, 0.0, Mode.RS)
            sol = subproblem.solve(sp)
            assert sol.status is SubproblemStatus.OPTIMAL
            assert transmit_power(sol.precoder) <= 5.0 * (1 + 1e-9) + 1e-9
            assert sol.precoder.tx_budget == 5.0

    def test_matches_exhaustive_grid_on_unit_instance(self):
        p, rx = cc_unit_state()
        sp = subproblem.assemble(CH1, LAYOUT1, rx, Scheme.CC, None, 1.0, 0.0, Mode.RS)
        sol = subproblem.solve(sp)
        ref = oracle.grid_subproblem(CH1, LAYOUT1, rx, Scheme.CC, None, 1.0, 0.0,
                                     oracle.GridSpec(0.0, 1.0, 801))
        assert sol.objective == pytest.approx(ref, abs=1e-3)

    def test_nors_never_beats_rs(self, rng):
        layout = build_group_layout([1, 2])
        for trial in range(6):
            ch = draw_channel(rng, 3, 2)
            scheme = (Scheme.SC, Scheme.CC, Scheme.MC)[trial % 3]
            alpha = 0.5 if scheme.uses_power_split else None
            p0 = ao.initialize_precoder(ch, layout, scheme, alpha, 10.0, seed=trial)
            rx = mmse_state(ch, p0, layout)
            rs_val = subproblem.solve(subproblem.assemble(
                ch, layout, rx, scheme, alpha, 10.0, 0.1, Mode.RS)).objective
            nors_val = subproblem.solve(subproblem.assemble(
                ch, layout, rx, scheme, alpha, 10.0, 0.1, Mode.NORS)).objective
            assert nors_val <= rs_val + 1e-6

    def test_threshold_binds_at_optimum(self, rng):
        layout = build_group_layout([1, 2])
        ch = draw_channel(rng, 3, 2)
        p0 = ao.initialize_precoder(ch, layout, Scheme.CC, None, 20.0, seed=3)
        sp = subproblem.assemble(ch, layout, mmse_state(ch, p0, layout),
                                 Scheme.CC, None, 20.0, 0.5, Mode.RS)
        sol = subproblem.solve(sp)
        assert sol.status is SubproblemStatus.OPTIMAL
        assert sol.rates.common_rate == pytest.approx(0.5, abs=1e-4)

    def test_phase_rotation_invariance(self):
        p, _ = cc_unit_state()
        values = []
        for theta in (0.0, 0.7, 2.1):
            ch = ChannelRealization(np.array([[np.exp(1j * theta)]]))
            rx = mmse_state(ch, p, LAYOUT1)
            sol = subproblem.solve(subproblem.assemble(
                ch, LAYOUT1, rx, Scheme.CC, None, 1.0, 0.0, Mode.RS))
            values.append(sol.objective)
        assert max(values) - min(values) <= 1e-6


class TestCvxpyCrossCheck:
    """Independent DCP formulation of the same program, as a second route."""

    @staticmethod
    def reference(ch, layout, rx, scheme, alpha, budget, rc_th, mode):
        import cvxpy as cp

        b, c = scheme_coefficients(scheme, alpha)
        m, k = ch.n_antennas, layout.n_groups
        pvar = cp.Variable((m, scheme.n_columns(k)), complex=True)
        r_c = cp.Variable()
        r_ck = cp.Variable(k, nonneg=True)
        r_k = cp.Variable(k)
        r_g = cp.Variable()
        if scheme is Scheme.CC:
            p_agg, priv = pvar[:, 0], pvar[:, 1:]
        elif scheme is Scheme.SC:
            p_agg, priv = cp.sum(pvar, axis=1), pvar
        else:
            p_agg, priv = cp.sum(pvar, axis=1), pvar[:, 1:]
        ln2 = np.log(2.0)
        cons = []
        for u in range(ch.n_users):
            h = ch.rows[u]
            img_a = h.conj() @ p_agg
            imgs = cp.hstack([h.conj() @ priv[:, j] for j in range(k)])
            w_eq, wt = complex(rx.common_eq[u]), float(rx.common_weight[u])
            eps0 = (abs(w_eq) ** 2 * (b * cp.square(cp.abs(img_a)) + c * cp.sum_squares(imgs) + 1)
                    - 2 * b * cp.real(w_eq * img_a) + b)
            cons.append(ln2 * (r_c + cp.sum(r_ck)) + wt * eps0 - np.log(b * wt) <= 1)
            g = layout.user_to_group[u]
            v_eq, vt = complex(rx.private_eq[u]), float(rx.private_weight[u])
            epsp = (abs(v_eq) ** 2 * (c * cp.sum_squares(imgs) + 1)
                    - 2 * c * cp.real(v_eq * (h.conj() @ priv[:, g])) + c)
            cons.append(ln2 * r_k[g] + vt * epsp - np.log(c * vt) <= 1)
        cons += [r_g <= r_ck[g] + r_k[g] for g in range(k)]
        cons.append(r_c >= rc_th)
        cons.append(b * cp.sum_squares(p_agg) + c * cp.sum_squares(priv) <= budget)
        if mode is Mode.NORS:
            cons.append(r_ck == 0)
        prob = cp.Problem(cp.Maximize(r_g), cons)
        prob.solve(solver=cp.CLARABEL)
        return prob.status, float(r_g.value)

    def test_agreement_on_random_instances(self, rng):
        for trial in range(9):
            m = int(rng.integers(1, 4))
            layout = build_group_layout(sorted(rng.integers(1, 3, size=rng.integers(1, 4)).tolist()))
            ch = draw_channel(rng, layout.n_users, m)
            scheme = (Scheme.SC, Scheme.CC, Scheme.MC)[trial % 3]
            mode = (Mode.RS, Mode.NORS)[trial % 2]
            alpha = float(rng.uniform(0.1, 0.9)) if scheme.uses_power_split else None
            budget = float(rng.uniform(0.5, 30.0))
            p0 = ao.initialize_precoder(ch, layout, scheme, alpha, budget, seed=trial)
            rx = mmse_state(ch, p0, layout)
            sol = subproblem.solve(subproblem.assemble(
                ch, layout, rx, scheme, alpha, budget, 0.05, mode))
            status, ref = self.reference(ch, layout, rx, scheme, alpha, budget, 0.05, mode)
            assert sol.status is SubproblemStatus.OPTIMAL
            assert status in ("optimal", "optimal_inaccurate")
            tol = 1e-5 if status == "optimal" else 1e-3
            assert sol.objective == pytest.approx(ref, abs=tol)


class TestDump:
    def test_documented_format(self):
        _, rx = cc_unit_state()
        sp = subproblem.assemble(CH1, LAYOUT1, rx, Scheme.CC, None, 1.0, 0.25, Mode.RS)
        text = sp.dumps()
        lines = text.splitlines()
        assert lines[0] == "rsmcast-conic-v1"
        assert lines[1] == f"nvar {sp.n_variables}"
        cone_lines = [ln for ln in lines if ln.startswith("cone ")]
        kinds = [ln.split()[1] for ln in cone_lines]
        assert kinds.count("soc") == 1 + 2 * CH1.n_users
        for ln in lines:
            if ln.startswith(("A ", "b ", "q ")):
                parts = ln.split()
                float(parts[-1])  # coefficient parses
                assert all(tok.lstrip("-").isdigit() for tok in parts[1:-1])

    def test_dump_to_file_roundtrip(self, tmp_path):
        _, rx = cc_unit_state()
        sp = subproblem.assemble(CH1, LAYOUT1, rx, Scheme.CC, None, 1.0, 0.0, Mode.RS)
        path = tmp_path / "program.txt"
        sp.dump(path)
        assert path.read_text() == sp.dumps()

    def test_refresh_changes_only_coefficients(self):
        p, rx = cc_unit_state()
        sp = subproblem.assemble(CH1, LAYOUT1, rx, Scheme.CC, None, 1.0, 0.0, Mode.RS)
        before = sp.dumps()
        sol = subproblem.solve(sp)
        sp.set_receivers(mmse_state(CH1, sol.precoder, LAYOUT1))
        after = sp.dumps()
        assert before != after
        assert before.splitlines()[:8] == after.splitlines()[:8]  # same structure header
