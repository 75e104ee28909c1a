"""Slow, independent brute-force checks used to validate the fast paths.

Everything here re-derives its math from received-signal moments and plain
rate formulas on purpose: nothing is shared with :mod:`rsmcast.metrics`,
:mod:`rsmcast.subproblem`, or :mod:`rsmcast.ao` beyond the value types, so
agreement between the two routes is meaningful evidence.

The exhaustive searches only cover desk-scale instances (single transmit
antenna, at most two groups). Column phases are fixed by alignment with the
conjugate channel of the stream they serve, which is exact whenever each
phase appears in a single alignment term (single-user instances, or CC where
the shared column is the whole aggregate) and otherwise a documented
heuristic lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridTooLargeError
from .model import ChannelRealization, GroupLayout, Mode, PrecoderSet, ReceiverState, Scheme

_REFINE_ROUNDS = 3
_ZOOM = 10.0


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    steps: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.steps < 2:
            raise ValueError("need at least 2 grid steps")


def _layer_coeffs(scheme: Scheme, alpha):
    if scheme is Scheme.CC:
        return 1.0, 1.0
    return float(alpha), float(1.0 - alpha)


def _split_columns(scheme: Scheme, columns):
    """(aggregate shared vector, private columns) for any scheme."""
    if scheme is Scheme.SC:
        return columns.sum(axis=1), columns
    if scheme is Scheme.CC:
        return columns[:, 0], columns[:, 1:]
    return columns.sum(axis=1), columns[:, 1:]


def _minimize_quadratic(y_power, cross, signal_power, grid: GridSpec):
    """Minimize |g|^2 * y_power - 2 Re{g * cross} + signal_power over complex g
    by a square search grid plus zoomed refinements around the best cell."""
    center_re = center_im = (grid.lo + grid.hi) / 2.0
    half = (grid.hi - grid.lo) / 2.0
    for _ in range(1 + _REFINE_ROUNDS):
        re = np.linspace(center_re - half, center_re + half, grid.steps)
        im = np.linspace(center_im - half, center_im + half, grid.steps)
        re_g, im_g = np.meshgrid(re, im, indexing="ij")
        val = (re_g ** 2 + im_g ** 2) * y_power \
            - 2.0 * (re_g * cross.real - im_g * cross.imag) + signal_power
        i, j = np.unravel_index(np.argmin(val), val.shape)
        center_re, center_im = re[i], im[j]
        half /= _ZOOM
    return complex(center_re, center_im)


def numeric_receiver(h, p: PrecoderSet, user: int, layout: GroupLayout,
                     grid: GridSpec = GridSpec(-2.0, 2.0, 41)):
    """Numerically minimize both stage MSEs over the complex equalizer.

    Works from the received-signal second moments: E|y|^2, the signal cross
    moment, and the signal power, for the shared stage and the
    post-cancellation private stage. Returns the two minimizers.
    """
    h = np.asarray(h, dtype=np.complex128)
    b, c = _layer_coeffs(p.scheme, p.alpha)
    agg, priv = _split_columns(p.scheme, p.columns)
    shared_img = complex(h.conj() @ agg)
    priv_imgs = h.conj() @ priv
    own_img = complex(priv_imgs[layout.user_to_group[user]])
    interference = c * float(np.sum(np.abs(priv_imgs) ** 2)) + 1.0

    w = _minimize_quadratic(b * abs(shared_img) ** 2 + interference,
                            b * shared_img, b, grid)
    v = _minimize_quadratic(interference, c * own_img, c, grid)
    return w, v


def _check_scale(ch: ChannelRealization, layout: GroupLayout, max_groups=2, max_users=None):
    if ch.n_antennas != 1:
        raise GridTooLargeError("exhaustive search only supports one transmit antenna")
    if layout.n_groups > max_groups:
        raise GridTooLargeError(f"exhaustive search only supports up to {max_groups} groups")
    if max_users is not None and ch.n_users > max_users:
        raise GridTooLargeError(f"exhaustive search only supports up to {max_users} users")


def _magnitude_combos(n_cols: int, grid: GridSpec):
    axis = np.linspace(max(grid.lo, 0.0), grid.hi, grid.steps)
    mesh = np.meshgrid(*([axis] * n_cols), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)  # (combos, n_cols)


def _best_split(pool, floors, steps):
    """Best max-min value when a nonnegative pool is split over the group
    refunds, found by gridding the split (kept independent of the fast
    water-filling allocator)."""
    if floors.shape[1] == 1:
        return pool + floors[:, 0]
    fractions = np.linspace(0.0, 1.0, steps)
    best = np.full(pool.shape, -np.inf)
    for s in fractions:
        cand = np.minimum(s * pool + floors[:, 0], (1.0 - s) * pool + floors[:, 1])
        best = np.maximum(best, cand)
    return best


def grid_subproblem(ch: ChannelRealization, layout: GroupLayout, rx: ReceiverState,
                    scheme: Scheme, alpha, tx_budget: float, rc_threshold: float,
                    grid: GridSpec, mode: Mode = Mode.RS):
    """Exhaustively search the precoder update for a frozen receiver state.

    Grids every column magnitude (phases fixed by conjugate-channel
    alignment), drops combinations beyond the power budget, evaluates each
    user's weighted-error rate bound (natural-log epigraph scaled back to
    bits, matching the solver's constraint definition), and maximizes the
    resulting max-min value over the gridded refund split. Returns the best
    value, or None when no gridded point is feasible.
    """
    _check_scale(ch, layout)
    b, c = _layer_coeffs(scheme, alpha)
    k = layout.n_groups
    n_cols = scheme.n_columns(k)
    shared_cols = [] if scheme is Scheme.SC else [0]
    priv_cols = list(range(1, k + 1)) if scheme.has_shared_column else list(range(k))
    agg_cols = priv_cols if scheme is Scheme.SC else (shared_cols + (priv_cols if scheme is Scheme.MC else []))

    # column phases: align each column's image with the equalizer it serves
    h0 = complex(ch.rows[0, 0])
    phases = np.zeros(n_cols)
    for idx, j in enumerate(priv_cols):
        ref = list(layout.group_members(idx))[0]
        phases[j] = np.angle(ch.rows[ref, 0]) - np.angle(rx.private_eq[ref])
    for j in shared_cols:
        phases[j] = np.angle(h0) - np.angle(rx.common_eq[0])
    units = np.exp(1j * phases)

    mags = _magnitude_combos(n_cols, grid)
    cols = mags * units  # (combos, n_cols) complex
    agg_val = cols[:, agg_cols].sum(axis=1)
    power = b * np.abs(agg_val) ** 2 + c * (mags[:, priv_cols] ** 2).sum(axis=1)
    keep = power <= tx_budget * (1.0 + 1e-12) + 1e-15
    if not np.any(keep):
        return None
    cols, agg_val = cols[keep], agg_val[keep]
    mags = mags[keep]

    ln2 = np.log(2.0)
    n_combo = cols.shape[0]
    shared_bound = np.full(n_combo, np.inf)
    floors = np.full((n_combo, k), np.inf)
    for n in range(ch.n_users):
        hn = np.conj(ch.rows[n, 0])
        imgs = hn * cols[:, priv_cols]  # h^H p_k per combo
        shared_img = hn * agg_val
        interference = c * (np.abs(imgs) ** 2).sum(axis=1) + 1.0
        w_eq, wt = rx.common_eq[n], rx.common_weight[n]
        err0 = (abs(w_eq) ** 2 * (b * np.abs(shared_img) ** 2 + interference)
                - 2.0 * (b * w_eq * shared_img).real + b)
        bound0 = (1.0 - (wt * err0 - np.log(b * wt))) / ln2
        shared_bound = np.minimum(shared_bound, bound0)

        g = layout.user_to_group[n]
        v_eq, vt = rx.private_eq[n], rx.private_weight[n]
        errp = (abs(v_eq) ** 2 * interference
                - 2.0 * (c * v_eq * imgs[:, g]).real + c)
        boundp = (1.0 - (vt * errp - np.log(c * vt))) / ln2
        floors[:, g] = np.minimum(floors[:, g], boundp)

    pool = shared_bound - rc_threshold
    feasible = pool >= 0.0
    if not np.any(feasible):
        return None
    pool, floors = pool[feasible], floors[feasible]
    if mode is Mode.RS:
        values = _best_split(pool, floors, grid.steps)
    else:
        values = floors.min(axis=1)
    return float(values.max())


def grid_end_to_end(ch: ChannelRealization, layout: GroupLayout, scheme: Scheme,
                    alpha, tx_budget: float, rc_threshold: float, grid: GridSpec,
                    mode: Mode = Mode.RS):
    """Directly maximize the exact max-min rate over gridded magnitudes.

    Single-antenna instances only: all channel images reduce to
    |h_n| * magnitude and the aggregate uses co-phased columns, so the search
    runs over column magnitudes plus the gridded refund split. Serves as the
    ground-truth bound for the alternating solver on tiny instances. Returns
    None when no gridded point supports the broadcast threshold.
    """
    _check_scale(ch, layout, max_users=3)
    b, c = _layer_coeffs(scheme, alpha)
    k = layout.n_groups
    n_cols = scheme.n_columns(k)
    priv_cols = list(range(1, k + 1)) if scheme.has_shared_column else list(range(k))
    if scheme is Scheme.SC:
        agg_cols = priv_cols
    elif scheme is Scheme.CC:
        agg_cols = [0]
    else:
        agg_cols = list(range(n_cols))

    mags = _magnitude_combos(n_cols, grid)
    agg_mag = mags[:, agg_cols].sum(axis=1)  # co-phased aggregate
    priv_sq = mags[:, priv_cols] ** 2
    power = b * agg_mag ** 2 + c * priv_sq.sum(axis=1)
    keep = power <= tx_budget * (1.0 + 1e-12) + 1e-15
    if not np.any(keep):
        return None
    agg_mag, priv_sq = agg_mag[keep], priv_sq[keep]

    n_combo = agg_mag.shape[0]
    shared_rate = np.full(n_combo, np.inf)
    floors = np.full((n_combo, k), np.inf)
    for n in range(ch.n_users):
        gain = abs(ch.rows[n, 0]) ** 2
        interference = c * gain * priv_sq.sum(axis=1) + 1.0
        rate0 = np.log2(1.0 + b * gain * agg_mag ** 2 / interference)
        shared_rate = np.minimum(shared_rate, rate0)
        g = layout.user_to_group[n]
        own = c * gain * priv_sq[:, g]
        ratep = np.log2(1.0 + own / (interference - own))
        floors[:, g] = np.minimum(floors[:, g], ratep)

    pool = shared_rate - rc_threshold
    feasible = pool >= 0.0
    if not np.any(feasible):
        return None
    pool, floors = pool[feasible], floors[feasible]
    if mode is Mode.RS:
        values = _best_split(pool, floors, grid.steps)
    else:
        values = floors.min(axis=1)
    return float(values.max())
