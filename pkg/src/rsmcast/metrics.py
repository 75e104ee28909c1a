"""Closed-form rate, MSE, and WMSE-weight algebra for a fixed precoder.

All users first decode the shared stream treating every private layer as
noise, then cancel it and decode their own group's stream. The functions
below evaluate, per user: the two effective interference-plus-noise powers,
the achievable rates, the scalar MMSE equalizers of both stages, the
resulting minimum MSEs, and the surrogate weights that tie WMSE minima to
rates (min WMSE = 1 - rate in bits).
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionMismatchError,
    LengthMismatchError,
    NonPositiveMseError,
    NonPositiveWeightError,
)
from .model import (
    ChannelRealization,
    GroupLayout,
    PrecoderSet,
    ReceiverState,
    aggregate_precoder,
    scheme_coefficients,
)


def _images(h, p: PrecoderSet, user: int, layout: GroupLayout):
    """Channel images (h^H p_A, h^H p_k for all k, h^H p_own) plus coefficients."""
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != (p.n_antennas,):
        raise DimensionMismatchError(
            f"channel vector has shape {h.shape}, precoder expects ({p.n_antennas},)"
        )
    if layout.n_groups != p.n_groups:
        raise DimensionMismatchError(
            f"layout has {layout.n_groups} groups, precoder has {p.n_groups}"
        )
    if not 0 <= user < layout.n_users:
        raise DimensionMismatchError(f"user index {user} outside 0..{layout.n_users - 1}")
    b_coeff, c_coeff = scheme_coefficients(p.scheme, p.alpha)
    agg_img = complex(h.conj() @ aggregate_precoder(p))
    priv_imgs = h.conj() @ p.private_columns
    own_img = complex(priv_imgs[layout.user_to_group[user]])
    return b_coeff, c_coeff, agg_img, priv_imgs, own_img


def effective_noises(h, p: PrecoderSet, user: int, layout: GroupLayout) -> tuple[float, float]:
    """Interference-plus-noise powers seen when decoding the shared stream
    (all private layers interfere) and, after cancelling it, the own private
    stream (own-group term removed). Both are >= 1 (unit noise floor)."""
    _, c_coeff, _, priv_imgs, own_img = _images(h, p, user, layout)
    r0 = c_coeff * float(np.sum(np.abs(priv_imgs) ** 2)) + 1.0
    rp = r0 - c_coeff * abs(own_img) ** 2
    return r0, rp


def user_rates(h, p: PrecoderSet, user: int, layout: GroupLayout) -> tuple[float, float]:
    """Achievable shared-stream and private-stream rates of one user, in bits."""
    b_coeff, c_coeff, agg_img, priv_imgs, own_img = _images(h, p, user, layout)
    r0 = c_coeff * float(np.sum(np.abs(priv_imgs) ** 2)) + 1.0
    rp = r0 - c_coeff * abs(own_img) ** 2
    rate_common = float(np.log2(1.0 + b_coeff * abs(agg_img) ** 2 / r0))
    rate_private = float(np.log2(1.0 + c_coeff * abs(own_img) ** 2 / rp))
    return rate_common, rate_private


def min_rates(ch: ChannelRealization, p: PrecoderSet, layout: GroupLayout):
    """Decodability limits: the shared-stream rate is the minimum over all
    users, each group's private rate the minimum over its members.

    Returns ``(shared_min, per_group_mins)`` with the latter a length-K array.
    """
    common = np.empty(ch.n_users)
    private = np.empty(ch.n_users)
    for n in range(ch.n_users):
        common[n], private[n] = user_rates(ch.rows[n], p, n, layout)
    floors = np.array([private[list(layout.group_members(k))].min() for k in range(layout.n_groups)])
    return float(common.min()), floors


def mmse_receivers(h, p: PrecoderSet, user: int, layout: GroupLayout) -> tuple[complex, complex]:
    """Scalar MMSE equalizers for the shared stream and the post-cancellation
    private stream. Minimizers of the two stage MSEs; denominators are >= 1."""
    b_coeff, c_coeff, agg_img, priv_imgs, own_img = _images(h, p, user, layout)
    r0 = c_coeff * float(np.sum(np.abs(priv_imgs) ** 2)) + 1.0
    w_eq = b_coeff * np.conj(agg_img) / (b_coeff * abs(agg_img) ** 2 + r0)
    v_eq = c_coeff * np.conj(own_img) / r0
    return complex(w_eq), complex(v_eq)


def mse_values(h, p: PrecoderSet, user: int, layout: GroupLayout,
               w_eq: complex, v_eq: complex) -> tuple[float, float]:
    """Stage MSEs for arbitrary scalar equalizers ``(w_eq, v_eq)``.

    The shared-stream error includes the stream's own received power; the
    private error assumes the shared stream was cancelled perfectly, so every
    private layer (own group included) remains in the quadratic term.
    """
    b_coeff, c_coeff, agg_img, priv_imgs, own_img = _images(h, p, user, layout)
    r0 = c_coeff * float(np.sum(np.abs(priv_imgs) ** 2)) + 1.0
    eps0 = (
        abs(w_eq) ** 2 * (b_coeff * abs(agg_img) ** 2 + r0)
        - 2.0 * (b_coeff * w_eq * agg_img).real
        + b_coeff
    )
    epsp = (
        abs(v_eq) ** 2 * r0
        - 2.0 * (c_coeff * v_eq * own_img).real
        + c_coeff
    )
    return float(eps0), float(epsp)


def mmse_values(h, p: PrecoderSet, user: int, layout: GroupLayout) -> tuple[float, float]:
    """Minimum stage MSEs, i.e. the MSEs at the MMSE equalizers:
    (1/B + |h^H p_A|^2 / r0)^-1 and (1/C + |h^H p_own|^2 / rp)^-1."""
    b_coeff, c_coeff, agg_img, priv_imgs, own_img = _images(h, p, user, layout)
    r0 = c_coeff * float(np.sum(np.abs(priv_imgs) ** 2)) + 1.0
    rp = r0 - c_coeff * abs(own_img) ** 2
    eps0_min = 1.0 / (1.0 / b_coeff + abs(agg_img) ** 2 / r0)
    epsp_min = 1.0 / (1.0 / c_coeff + abs(own_img) ** 2 / rp)
    return float(eps0_min), float(epsp_min)


def optimal_weights(eps0_min: float, epsp_min: float) -> tuple[float, float]:
    """Surrogate weights that make the WMSE minimum equal 1 - rate: the
    reciprocals of the minimum MSEs."""
    if eps0_min <= 0 or epsp_min <= 0:
        raise NonPositiveMseError(f"MSEs must be positive, got ({eps0_min}, {epsp_min})")
    return 1.0 / eps0_min, 1.0 / epsp_min


def augmented_wmse(eps: float, weight: float, coeff: float) -> float:
    """Weighted MSE minus the log of (layer coefficient * weight):
    ``weight * eps - log2(coeff * weight)``."""
    if weight <= 0:
        raise NonPositiveWeightError(f"weight must be positive, got {weight}")
    if coeff <= 0:
        raise NonPositiveWeightError(f"layer coefficient must be positive, got {coeff}")
    return float(weight * eps - np.log2(coeff * weight))


def mmf_objective(layout: GroupLayout, group_common_rates, per_user_private) -> float:
    """Max-min fairness value: min over groups of (refund + weakest member's
    private rate)."""
    refunds = np.asarray(group_common_rates, dtype=np.float64)
    private = np.asarray(per_user_private, dtype=np.float64)
    if refunds.shape != (layout.n_groups,):
        raise LengthMismatchError(
            f"expected {layout.n_groups} per-group refunds, got shape {refunds.shape}"
        )
    if private.shape != (layout.n_users,):
        raise LengthMismatchError(
            f"expected {layout.n_users} per-user private rates, got shape {private.shape}"
        )
    best = np.inf
    for k in range(layout.n_groups):
        members = list(layout.group_members(k))
        best = min(best, refunds[k] + private[members].min())
    return float(best)


def receiver_state(ch: ChannelRealization, p: PrecoderSet, layout: GroupLayout) -> ReceiverState:
    """MMSE equalizers plus reciprocal-MSE weights for every user at once."""
    n = ch.n_users
    common_eq = np.empty(n, dtype=np.complex128)
    private_eq = np.empty(n, dtype=np.complex128)
    common_weight = np.empty(n)
    private_weight = np.empty(n)
    for u in range(n):
        common_eq[u], private_eq[u] = mmse_receivers(ch.rows[u], p, u, layout)
        eps0, epsp = mmse_values(ch.rows[u], p, u, layout)
        common_weight[u], private_weight[u] = optimal_weights(eps0, epsp)
    return ReceiverState(common_eq, private_eq, common_weight, private_weight)
