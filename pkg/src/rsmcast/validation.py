"""Input validation helpers shared by the estimator, harness, and CLI."""

from __future__ import annotations

import numpy as np

from .ao import InitStrategy
from .errors import DimensionMismatchError, EmptyGroupsError, LengthMismatchError
from .model import Mode, Scheme


def check_channel_matrix(x) -> np.ndarray:
    """Coerce to a finite complex (n_users, n_antennas) matrix."""
    arr = np.asarray(x)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatchError(
            f"expected a 2-D (n_users, n_antennas) channel matrix, got shape {arr.shape}"
        )
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError("channel matrix must be finite")
    return arr


def check_group_sizes(group_sizes, n_users: int | None = None) -> tuple[int, ...]:
    """Validate group sizes, optionally against a user count."""
    try:
        sizes = tuple(int(g) for g in group_sizes)
    except TypeError as exc:
        raise EmptyGroupsError(f"group sizes must be a sequence of ints, got {group_sizes!r}") from exc
    if not sizes or any(g < 1 for g in sizes):
        raise EmptyGroupsError(f"group sizes must be positive, got {group_sizes!r}")
    if n_users is not None and sum(sizes) != n_users:
        raise LengthMismatchError(
            f"group sizes sum to {sum(sizes)} but the channel has {n_users} users"
        )
    return sizes


def as_scheme(value) -> Scheme:
    if isinstance(value, Scheme):
        return value
    try:
        return Scheme[str(value).upper()]
    except KeyError:
        raise ValueError(f"unknown scheme {value!r}; expected one of SC, CC, MC") from None


def as_mode(value) -> Mode:
    if isinstance(value, Mode):
        return value
    text = str(value).replace("-", "").replace("_", "").upper()
    if text == "RS":
        return Mode.RS
    if text == "NORS":
        return Mode.NORS
    raise ValueError(f"unknown mode {value!r}; expected RS or NoRS")


def as_init_strategy(value) -> InitStrategy:
    if isinstance(value, InitStrategy):
        return value
    text = str(value).replace("_", "-").lower()
    for strategy in InitStrategy:
        if strategy.value == text:
            return strategy
    raise ValueError(
        f"unknown init strategy {value!r}; expected seeded-random or matched-filter"
    )
