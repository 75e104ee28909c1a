"""Domain types for downlink multi-group multicasting with a shared broadcast stream.

A base station with M antennas serves N single-antenna users partitioned into K
multicast groups. On top of the K group messages it broadcasts one stream that
every user must decode; three transmit constructions are supported (see
:class:`Scheme`). Everything here is an immutable value object; the numeric
work lives in :mod:`rsmcast.metrics` and :mod:`rsmcast.subproblem`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    AlphaOutOfRangeError,
    DimensionMismatchError,
    EmptyGroupsError,
)

# Power-split ratios are kept away from {0, 1} so both layer coefficients stay
# strictly positive and their logarithms finite.
ALPHA_MIN = 0.01
ALPHA_MAX = 0.99


class Scheme(Enum):
    """How the shared broadcast stream is carried by the transmitter.

    SC superposes the shared stream on the private multicast layers (the
    private columns double as its carriers), CC gives it a dedicated precoder
    column, and MC does both. SC and MC split unit symbol power between the
    shared and private layers via a ratio ``alpha``; CC needs no split.
    """

    SC = "SC"
    CC = "CC"
    MC = "MC"

    @property
    def has_shared_column(self) -> bool:
        return self is not Scheme.SC

    @property
    def uses_power_split(self) -> bool:
        return self is not Scheme.CC

    def n_columns(self, n_groups: int) -> int:
        """Number of precoder columns: K for SC, K+1 for CC/MC."""
        return n_groups + (1 if self.has_shared_column else 0)


class Mode(Enum):
    """RS lets each group message borrow capacity from the shared stream;
    NoRS pins all per-group refunds to zero."""

    RS = "RS"
    NORS = "NoRS"


@dataclass(frozen=True)
class GroupLayout:
    """Partition of users 0..N-1 into K contiguous groups with ascending sizes."""

    group_sizes: tuple[int, ...]
    user_to_group: tuple[int, ...]

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)

    @property
    def n_users(self) -> int:
        return len(self.user_to_group)

    def group_members(self, k: int) -> range:
        """Users belonging to group ``k`` (contiguous by construction)."""
        start = sum(self.group_sizes[:k])
        return range(start, start + self.group_sizes[k])


def build_group_layout(group_sizes) -> GroupLayout:
    """Create a canonical layout from a list of group sizes.

    Sizes are sorted ascending (canonical ordering) and users are assigned
    contiguously: group 0 gets users ``0..G_0-1`` and so on. Raises
    :class:`EmptyGroupsError` for an empty list or any non-positive size.
    """
    sizes = [int(g) for g in group_sizes]
    if not sizes or any(g < 1 for g in sizes):
        raise EmptyGroupsError(f"group sizes must be positive, got {group_sizes!r}")
    sizes.sort()
    user_to_group = tuple(k for k, g in enumerate(sizes) for _ in range(g))
    return GroupLayout(group_sizes=tuple(sizes), user_to_group=user_to_group)


@dataclass(frozen=True)
class ChannelRealization:
    """Per-user channel vectors: row n is the length-M channel of user n.

    Receiver noise is fixed at unit variance throughout, so the transmit
    budget doubles as the transmit SNR.
    """

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.complex128)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise DimensionMismatchError(
                f"channel must be a (n_users, n_antennas) matrix, got shape {rows.shape}"
            )
        if not np.all(np.isfinite(rows)):
            raise ValueError("channel entries must be finite")
        object.__setattr__(self, "rows", rows)

    @property
    def n_users(self) -> int:
        return self.rows.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.rows.shape[1]

    @property
    def noise_variance(self) -> float:
        return 1.0


@dataclass(frozen=True)
class PrecoderSet:
    """Precoder columns for one scheme, plus its power split and budget.

    ``columns`` has shape (M, K) for SC and (M, K+1) for CC/MC, where column 0
    of a CC/MC set carries the shared stream and the remaining K columns carry
    the group messages in layout order. ``alpha`` is the shared-layer power
    ratio for SC/MC and must be ``None`` for CC.
    """

    scheme: Scheme
    columns: np.ndarray
    tx_budget: float
    alpha: float | None = None

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=np.complex128)
        if cols.ndim != 2:
            raise DimensionMismatchError("precoder columns must form a 2-D matrix")
        min_cols = 2 if self.scheme.has_shared_column else 1
        if cols.shape[1] < min_cols:
            raise DimensionMismatchError(
                f"{self.scheme.value} precoder needs at least {min_cols} columns"
            )
        if self.tx_budget < 0:
            raise ValueError("transmit budget must be non-negative")
        if self.scheme.uses_power_split:
            if self.alpha is None or not (ALPHA_MIN <= self.alpha <= ALPHA_MAX):
                raise AlphaOutOfRangeError(
                    f"{self.scheme.value} needs alpha in [{ALPHA_MIN}, {ALPHA_MAX}], "
                    f"got {self.alpha!r}"
                )
        elif self.alpha is not None:
            object.__setattr__(self, "alpha", None)
        object.__setattr__(self, "columns", cols)

    @property
    def n_antennas(self) -> int:
        return self.columns.shape[0]

    @property
    def n_groups(self) -> int:
        return self.columns.shape[1] - (1 if self.scheme.has_shared_column else 0)

    @property
    def private_columns(self) -> np.ndarray:
        """The K columns carrying the group messages, shape (M, K)."""
        return self.columns[:, 1:] if self.scheme.has_shared_column else self.columns

    @property
    def shared_column(self) -> np.ndarray | None:
        """The dedicated shared-stream column (CC/MC), or None for SC."""
        return self.columns[:, 0] if self.scheme.has_shared_column else None


def scheme_coefficients(scheme: Scheme, alpha: float | None = None) -> tuple[float, float]:
    """Layer power coefficients (shared, private) for a scheme.

    SC and MC split unit symbol power as (alpha, 1 - alpha); CC uses unit
    power on both layers. Raises :class:`AlphaOutOfRangeError` when SC/MC is
    asked for a split outside [0.01, 0.99].
    """
    if scheme is Scheme.CC:
        return 1.0, 1.0
    if alpha is None or not (ALPHA_MIN <= alpha <= ALPHA_MAX):
        raise AlphaOutOfRangeError(
            f"{scheme.value} needs alpha in [{ALPHA_MIN}, {ALPHA_MAX}], got {alpha!r}"
        )
    return float(alpha), float(1.0 - alpha)


def aggregate_precoder(p: PrecoderSet) -> np.ndarray:
    """Effective transmit vector of the shared stream.

    SC sums the private columns, CC uses its dedicated column, and MC sums
    the dedicated column with the private ones.
    """
    if p.scheme is Scheme.SC:
        return p.columns.sum(axis=1)
    if p.scheme is Scheme.CC:
        return p.columns[:, 0].copy()
    return p.columns.sum(axis=1)  # MC: dedicated plus private


def transmit_power(p: PrecoderSet) -> float:
    """Average radiated power of the precoder set.

    Computed as B*||p_A||^2 + C*sum_k ||p_k||^2 with (B, C) the scheme's layer
    coefficients and p_A the aggregate shared-stream vector; for SC the two
    terms couple because p_A is the sum of the private columns.
    """
    b_coeff, c_coeff = scheme_coefficients(p.scheme, p.alpha)
    agg = aggregate_precoder(p)
    private = p.private_columns
    return float(
        b_coeff * np.vdot(agg, agg).real
        + c_coeff * np.sum(np.abs(private) ** 2)
    )


@dataclass(frozen=True)
class ReceiverState:
    """Per-user scalar equalizers and WMSE weights for both decoding stages."""

    common_eq: np.ndarray
    private_eq: np.ndarray
    common_weight: np.ndarray
    private_weight: np.ndarray

    def __post_init__(self):
        from .errors import NonPositiveWeightError

        ce = np.asarray(self.common_eq, dtype=np.complex128)
        pe = np.asarray(self.private_eq, dtype=np.complex128)
        cw = np.asarray(self.common_weight, dtype=np.float64)
        pw = np.asarray(self.private_weight, dtype=np.float64)
        if not (ce.shape == pe.shape == cw.shape == pw.shape) or ce.ndim != 1:
            raise DimensionMismatchError("receiver state arrays must share one shape (n_users,)")
        if np.any(cw <= 0) or np.any(pw <= 0):
            raise NonPositiveWeightError("WMSE weights must be strictly positive")
        object.__setattr__(self, "common_eq", ce)
        object.__setattr__(self, "private_eq", pe)
        object.__setattr__(self, "common_weight", cw)
        object.__setattr__(self, "private_weight", pw)

    @property
    def n_users(self) -> int:
        return self.common_eq.shape[0]


@dataclass(frozen=True)
class RateAllocation:
    """Rate split for one precoder, in bits per channel use.

    ``common_rate`` is the system-wide broadcast rate, ``group_common_rates``
    the per-group refunds carved out of the shared stream,
    ``group_private_rates`` the per-group private floors, and ``mmf_rate`` the
    max-min objective min_k(refund_k + floor_k).
    """

    common_rate: float
    group_common_rates: np.ndarray
    group_private_rates: np.ndarray
    mmf_rate: float

    def __post_init__(self):
        gc = np.asarray(self.group_common_rates, dtype=np.float64)
        gp = np.asarray(self.group_private_rates, dtype=np.float64)
        if gc.shape != gp.shape or gc.ndim != 1:
            raise DimensionMismatchError("per-group rate arrays must share one shape (n_groups,)")
        object.__setattr__(self, "group_common_rates", gc)
        object.__setattr__(self, "group_private_rates", gp)
