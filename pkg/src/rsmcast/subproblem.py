"""Per-iteration convex precoder update as a second-order cone program.

With equalizers and weights frozen, each user's augmented WMSE is a convex
quadratic in the precoder columns, so the precoder/rate-split update is an
SOCP: every WMSE bound becomes a rotated-cone epigraph written as a standard
second-order cone, complex precoder entries are lifted to real pairs, and the
power budget is one more cone. The program is assembled directly in the
conic standard form ``minimize q'x  s.t.  b - A x in K`` and handed to the
Clarabel interior-point solver.

The WMSE epigraphs are evaluated in natural-log units internally: the
reciprocal-MSE weight is the exact minimizer of ``w*eps - ln(coeff*w)``, so
``1 - xi`` (nats) never overestimates the achievable rate at any precoder
and equals it after a receiver refresh. Rate variables stay in bits and are
scaled by ln 2 inside those constraints; with the weight convention used
here, a bits-flavored epigraph would overestimate rates away from the
refresh point by up to ``1 - (1 + ln ln 2)/ln 2 ~ 0.086`` bits, breaking
both monotone ascent and exact-rate feasibility of the converged split.

Variable layout (all real):

* precoder columns first, column ``j`` occupying ``[2*M*j, 2*M*(j+1))`` as
  ``[Re(p_j); Im(p_j)]`` (for CC/MC column 0 is the shared-stream column),
* then the broadcast rate, K per-group refunds, K per-group floors, and the
  max-min objective variable.

Cone order: an optional zero cone pinning the refunds (NoRS), a nonnegative
cone (refund bounds, broadcast threshold, per-group objective links), the
power cone, then one cone per user for the shared stage followed by one per
user for the private stage.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import Enum

import clarabel
import numpy as np
from scipy import sparse

from .errors import DimensionMismatchError
from .model import (
    ChannelRealization,
    GroupLayout,
    Mode,
    PrecoderSet,
    RateAllocation,
    ReceiverState,
    Scheme,
    scheme_coefficients,
    transmit_power,
)


class SubproblemStatus(Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NUMERICAL_TROUBLE = "NumericalTrouble"


@dataclass
class SubproblemSolution:
    """Outcome of one conic solve: the updated precoder, the surrogate rate
    split the solver chose, and the surrogate max-min objective."""

    status: SubproblemStatus
    precoder: PrecoderSet | None
    rates: RateAllocation | None
    objective: float


class ConicSubproblem:
    """Assembled cone program for fixed equalizers and weights.

    ``set_receivers`` refreshes every coefficient that depends on the
    equalizer/weight state while keeping the structure, so an alternating
    loop can reuse one instance across iterations.
    """

    def __init__(self, ch: ChannelRealization, layout: GroupLayout, rx: ReceiverState,
                 scheme: Scheme, alpha: float | None, tx_budget: float,
                 rc_threshold: float, mode: Mode, objective: str = "mmf"):
        if objective not in ("mmf", "common"):
            raise ValueError("objective must be 'mmf' or 'common'")
        if layout.n_users != ch.n_users:
            raise DimensionMismatchError(
                f"layout covers {layout.n_users} users, channel has {ch.n_users}"
            )
        if rx.n_users != ch.n_users:
            raise DimensionMismatchError(
                f"receiver state covers {rx.n_users} users, channel has {ch.n_users}"
            )
        if tx_budget < 0:
            raise ValueError("transmit budget must be non-negative")
        if rc_threshold < 0:
            raise ValueError("broadcast rate threshold must be non-negative")
        self.ch = ch
        self.layout = layout
        self.scheme = scheme
        self.alpha = None if scheme is Scheme.CC else alpha
        self.tx_budget = float(tx_budget)
        self.rc_threshold = float(rc_threshold)
        self.mode = mode
        self.objective = objective
        self.b_coeff, self.c_coeff = scheme_coefficients(scheme, alpha)

        m = ch.n_antennas
        k = layout.n_groups
        self.n_cols = scheme.n_columns(k)
        self._m = m
        self._k = k
        self._n = ch.n_users
        self._np = 2 * m * self.n_cols
        self._i_rc = self._np
        self._i_rck = self._np + 1
        self._i_rk = self._np + 1 + k
        self._i_rg = self._np + 1 + 2 * k
        self.n_variables = self._np + 2 * k + 2

        if scheme is Scheme.SC:
            agg_cols = list(range(k))
            self._priv_cols = list(range(k))
        elif scheme is Scheme.CC:
            agg_cols = [0]
            self._priv_cols = list(range(1, k + 1))
        else:
            agg_cols = list(range(k + 1))
            self._priv_cols = list(range(1, k + 1))
        self._agg_cols = agg_cols

        # Per-user channel-image rows on the lifted variables: h^H p_j has
        # Re = [hr, hi].x_j and Im = [-hi, hr].x_j on column j's slice.
        nvar = self.n_variables
        self._agg_img = np.zeros((self._n, 2, nvar))
        self._priv_img = np.zeros((self._n, 2 * k, nvar))
        for n in range(self._n):
            hr, hi = ch.rows[n].real, ch.rows[n].imag
            re_blk = np.concatenate([hr, hi])
            im_blk = np.concatenate([-hi, hr])
            for j in agg_cols:
                s = slice(2 * m * j, 2 * m * (j + 1))
                self._agg_img[n, 0, s] += re_blk
                self._agg_img[n, 1, s] += im_blk
            for idx, j in enumerate(self._priv_cols):
                s = slice(2 * m * j, 2 * m * (j + 1))
                self._priv_img[n, 2 * idx, s] = re_blk
                self._priv_img[n, 2 * idx + 1, s] = im_blk

        self._build_static()
        self.set_receivers(rx)

    # -- structure ---------------------------------------------------------

    def _build_static(self):
        nvar = self.n_variables
        k = self._k
        rows, bvals, cones = [], [], []

        n_pins = 0
        if self.mode is Mode.NORS:
            for g in range(k):
                r = np.zeros(nvar)
                r[self._i_rck + g] = 1.0
                rows.append(r)
                bvals.append(0.0)
            n_pins += k
        if self.objective == "common":
            # the split variables are meaningless here; pin them so the
            # program has no free unbounded directions
            for idx in [self._i_rk + g for g in range(k)] + [self._i_rg]:
                r = np.zeros(nvar)
                r[idx] = 1.0
                rows.append(r)
                bvals.append(0.0)
            n_pins += k + 1
        if n_pins:
            cones.append(("zero", n_pins))

        for g in range(k):  # refunds >= 0
            r = np.zeros(nvar)
            r[self._i_rck + g] = -1.0
            rows.append(r)
            bvals.append(0.0)
        r = np.zeros(nvar)  # broadcast rate >= threshold
        r[self._i_rc] = -1.0
        rows.append(r)
        bvals.append(-self.rc_threshold)
        for g in range(k):  # objective <= refund + floor
            r = np.zeros(nvar)
            r[self._i_rg] = 1.0
            r[self._i_rck + g] = -1.0
            r[self._i_rk + g] = -1.0
            rows.append(r)
            bvals.append(0.0)
        cones.append(("nonneg", 2 * k + 1))

        # power cone: ||[sqrt(B) p_A ; sqrt(C) p_private]|| <= sqrt(budget)
        m = self._m
        rows.append(np.zeros(nvar))
        bvals.append(float(np.sqrt(self.tx_budget)))
        agg_block = np.zeros((2 * m, nvar))
        for j in self._agg_cols:
            s = slice(2 * m * j, 2 * m * (j + 1))
            agg_block[:, s] += np.eye(2 * m)
        for rr in np.sqrt(self.b_coeff) * agg_block:
            rows.append(-rr)
            bvals.append(0.0)
        for j in self._priv_cols:
            s = slice(2 * m * j, 2 * m * (j + 1))
            blk = np.zeros((2 * m, nvar))
            blk[:, s] = np.sqrt(self.c_coeff) * np.eye(2 * m)
            for rr in blk:
                rows.append(-rr)
                bvals.append(0.0)
        cones.append(("soc", 1 + 2 * m * (1 + k)))

        self._static_rows = np.vstack(rows)
        self._static_b = np.array(bvals)
        self._static_cones = cones

        # shared stage: z = 1 - const - ln2*(Rc + sum refunds) - linear(P);
        # rates are in bits, the epigraph in nats (see module docstring)
        ln2 = np.log(2.0)
        zc = np.zeros(nvar)
        zc[self._i_rc] = -ln2
        zc[self._i_rck:self._i_rck + k] = -ln2
        self._zrow_common = zc
        self._zrow_private = np.zeros((k, nvar))
        for g in range(k):
            self._zrow_private[g, self._i_rk + g] = -ln2

    def set_receivers(self, rx: ReceiverState):
        """Refresh all equalizer/weight-dependent coefficients.

        Each user's epigraph is divided by its own weight before encoding
        (``eps <= z/w`` instead of ``w*eps <= z``): near convergence the
        weights span several orders of magnitude, and a conic solver can only
        rescale a second-order cone uniformly, so leaving the weight inside
        one cone makes the KKT systems near-singular at high SNR.
        """
        if rx.n_users != self._n:
            raise DimensionMismatchError(
                f"receiver state covers {rx.n_users} users, expected {self._n}"
            )
        self._rx = rx
        b_coeff, c_coeff = self.b_coeff, self.c_coeff
        k = self._k
        rows, bvals, cones = [], [], []

        # Epigraph of ||u||^2 <= z as a standard cone [(z+1)/2; u; (z-1)/2].
        for n in range(self._n):
            w_eq = rx.common_eq[n]
            wt = rx.common_weight[n]
            gain = abs(w_eq)
            q0 = b_coeff * w_eq
            zrow = self._zrow_common / wt + 2.0 * (
                q0.real * self._agg_img[n, 0] - q0.imag * self._agg_img[n, 1]
            )
            zconst = (1.0 + np.log(b_coeff * wt)) / wt - b_coeff
            rows.append(-zrow / 2.0)
            bvals.append((zconst + 1.0) / 2.0)
            for rr in np.sqrt(b_coeff) * gain * self._agg_img[n]:
                rows.append(-rr)
                bvals.append(0.0)
            for rr in np.sqrt(c_coeff) * gain * self._priv_img[n]:
                rows.append(-rr)
                bvals.append(0.0)
            rows.append(np.zeros(self.n_variables))
            bvals.append(gain)  # noise term of the error
            rows.append(-zrow / 2.0)
            bvals.append((zconst - 1.0) / 2.0)
            cones.append(("soc", 2 * k + 5))

        for n in range(self._n):
            g = self.layout.user_to_group[n]
            v_eq = rx.private_eq[n]
            vt = rx.private_weight[n]
            gain = abs(v_eq)
            qp = c_coeff * v_eq
            own = self._priv_img[n, 2 * g:2 * g + 2]
            zrow = self._zrow_private[g] / vt + 2.0 * (qp.real * own[0] - qp.imag * own[1])
            zconst = (1.0 + np.log(c_coeff * vt)) / vt - c_coeff
            rows.append(-zrow / 2.0)
            bvals.append((zconst + 1.0) / 2.0)
            for rr in np.sqrt(c_coeff) * gain * self._priv_img[n]:
                rows.append(-rr)
                bvals.append(0.0)
            rows.append(np.zeros(self.n_variables))
            bvals.append(gain)
            rows.append(-zrow / 2.0)
            bvals.append((zconst - 1.0) / 2.0)
            cones.append(("soc", 2 * k + 3))

        self._dyn_rows = np.vstack(rows)
        self._dyn_b = np.array(bvals)
        self._dyn_cones = cones

    # -- conic data --------------------------------------------------------

    @property
    def num_constraints(self) -> int:
        """Constraint count in the modeling sense: one shared-stage bound per
        user, one private-stage bound per user, one objective link per group,
        the broadcast threshold, the power budget, and (NoRS only) one refund
        pin per group. Refund nonnegativity is counted as a variable domain."""
        pins = self._k if self.mode is Mode.NORS else 0
        return 2 * self._n + self._k + 2 + pins

    @property
    def num_rate_variables(self) -> int:
        return 2 * self._k + 2

    @property
    def _obj_index(self) -> int:
        return self._i_rc if self.objective == "common" else self._i_rg

    def conic_data(self):
        """(q, A, b, cones) in the solver's standard form."""
        q = np.zeros(self.n_variables)
        q[self._obj_index] = -1.0
        dense = np.vstack([self._static_rows, self._dyn_rows])
        dense[np.abs(dense) < 1e-14] = 0.0  # cancellation residue only
        a_mat = sparse.csc_matrix(dense)
        b_vec = np.concatenate([self._static_b, self._dyn_b])
        cones = self._static_cones + self._dyn_cones
        return q, a_mat, b_vec, cones

    def dump(self, target):
        """Write the assembled cone program as plain text.

        Format (one item per line, 0-based indices, nonzeros only)::

            rsmcast-conic-v1
            nvar <n>           # variables; precoder lifted [Re;Im] per column,
            ncols <n>          # then rate variables (see module docstring)
            antennas <m> users <n> groups <k>
            cone <zero|nonneg|soc> <dim>
            q <col> <value>
            A <row> <col> <value>
            b <row> <value>

        The program is ``minimize q'x  s.t.  b - A x in K`` with the cones in
        listed order. ``target`` is a path or a writable text file.
        """
        q, a_mat, b_vec, cones = self.conic_data()
        close = False
        if not hasattr(target, "write"):
            target = open(target, "w", encoding="utf-8")
            close = True
        try:
            target.write("rsmcast-conic-v1\n")
            target.write(f"nvar {self.n_variables}\n")
            target.write(f"ncols {self.n_cols}\n")
            target.write(f"antennas {self._m} users {self._n} groups {self._k}\n")
            for kind, dim in cones:
                target.write(f"cone {kind} {dim}\n")
            for i in np.nonzero(q)[0]:
                target.write(f"q {i} {q[i]:.17g}\n")
            coo = a_mat.tocoo()
            order = np.lexsort((coo.col, coo.row))
            for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                target.write(f"A {r} {c} {v:.17g}\n")
            for i in np.nonzero(b_vec)[0]:
                target.write(f"b {i} {b_vec[i]:.17g}\n")
        finally:
            if close:
                target.close()

    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()

    def _extract_precoder(self, x: np.ndarray) -> PrecoderSet:
        m = self._m
        cols = np.empty((m, self.n_cols), dtype=np.complex128)
        for j in range(self.n_cols):
            s = x[2 * m * j:2 * m * (j + 1)]
            cols[:, j] = s[:m] + 1j * s[m:]
        p = PrecoderSet(self.scheme, cols, tx_budget=self.tx_budget, alpha=self.alpha)
        power = transmit_power(p)
        if power > self.tx_budget:
            # interior-point feasibility slack; project back onto the budget
            scale = np.sqrt(self.tx_budget / power) if power > 0 else 0.0
            p = PrecoderSet(self.scheme, cols * scale, tx_budget=self.tx_budget,
                            alpha=self.alpha)
        return p


def assemble(ch: ChannelRealization, layout: GroupLayout, rx: ReceiverState,
             scheme: Scheme, alpha: float | None, tx_budget: float,
             rc_threshold: float, mode: Mode) -> ConicSubproblem:
    """Build the precoder/rate-split update for the given frozen receiver state."""
    return ConicSubproblem(ch, layout, rx, scheme, alpha, tx_budget, rc_threshold, mode)


_OPTIMAL = {"Solved", "AlmostSolved"}
_INFEASIBLE = {"PrimalInfeasible", "AlmostPrimalInfeasible"}


def _settings(tol_gap_rel=1e-8, tol_feas=1e-9, strict_reduced=True, regularize=False):
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.tol_gap_abs = 1e-9
    s.tol_gap_rel = tol_gap_rel
    s.tol_feas = tol_feas
    if strict_reduced:
        # keep reduced-accuracy exits meaningful (defaults allow 1e-4 residuals)
        s.reduced_tol_gap_abs = 1e-7
        s.reduced_tol_gap_rel = 1e-7
        s.reduced_tol_feas = 1e-7
    if regularize:
        # large weight spreads near convergence can make the KKT factorization
        # borderline singular; extra regularization and scaling passes recover it
        s.static_regularization_constant = 1e-7
        s.equilibrate_max_iter = 50
    s.max_iter = 500
    return s


def solve(sp: ConicSubproblem) -> SubproblemSolution:
    """Solve the assembled program.

    Returns the updated precoder (projected onto the power budget), the
    surrogate rate split, and the surrogate objective value. Infeasibility
    means the broadcast threshold cannot be met for the frozen receiver state
    within the power budget. A stalled solve is retried with progressively
    relaxed tolerance targets (last resort: reduced-accuracy exits at the
    solver defaults, roughly 1e-4 residuals) before reporting numerical
    trouble.
    """
    q, a_mat, b_vec, cone_spec = sp.conic_data()
    cones = []
    for kind, dim in cone_spec:
        if kind == "zero":
            cones.append(clarabel.ZeroConeT(dim))
        elif kind == "nonneg":
            cones.append(clarabel.NonnegativeConeT(dim))
        else:
            cones.append(clarabel.SecondOrderConeT(dim))
    p_mat = sparse.csc_matrix((sp.n_variables, sp.n_variables))

    status = None
    x = None
    attempts = (
        _settings(),
        _settings(regularize=True),
        _settings(tol_gap_rel=1e-7, tol_feas=1e-8, regularize=True),
        _settings(strict_reduced=False, regularize=True),
    )
    for settings in attempts:
        solver = clarabel.DefaultSolver(p_mat, q, a_mat, b_vec, cones, settings)
        result = solver.solve()
        status = str(result.status)
        if status in _OPTIMAL or status in _INFEASIBLE:
            x = np.asarray(result.x)
            break

    if status in _INFEASIBLE:
        return SubproblemSolution(SubproblemStatus.INFEASIBLE, None, None, float("nan"))
    if status not in _OPTIMAL:
        return SubproblemSolution(SubproblemStatus.NUMERICAL_TROUBLE, None, None, float("nan"))

    precoder = sp._extract_precoder(x)
    k = sp._k
    rates = RateAllocation(
        common_rate=float(x[sp._i_rc]),
        group_common_rates=x[sp._i_rck:sp._i_rck + k].copy(),
        group_private_rates=x[sp._i_rk:sp._i_rk + k].copy(),
        mmf_rate=float(x[sp._i_rg]),
    )
    return SubproblemSolution(SubproblemStatus.OPTIMAL, precoder, rates,
                              float(x[sp._obj_index]))
