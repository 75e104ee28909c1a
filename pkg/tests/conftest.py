import logging

import numpy as np
import pytest

from rsmcast import ChannelRealization, PrecoderSet, Scheme, build_group_layout

logging.getLogger("rsmcast").setLevel(logging.ERROR)

SCHEMES = (Scheme.SC, Scheme.CC, Scheme.MC)


def draw_instance(rng):
    """One random (channel row, precoder, layout, user) tuple for identity suites."""
    m = int(rng.integers(1, 5))
    sizes = sorted(int(s) for s in rng.integers(1, 4, size=rng.integers(1, 4)))
    layout = build_group_layout(sizes)
    scheme = SCHEMES[int(rng.integers(3))]
    alpha = float(rng.uniform(0.01, 0.99)) if scheme.uses_power_split else None
    cols = rng.standard_normal((m, scheme.n_columns(layout.n_groups))) \
        + 1j * rng.standard_normal((m, scheme.n_columns(layout.n_groups)))
    cols *= rng.uniform(0.1, 2.0)
    p = PrecoderSet(scheme, cols, tx_budget=float(4 * np.sum(np.abs(cols) ** 2) + 1),
                    alpha=alpha)
    h = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2)
    user = int(rng.integers(layout.n_users))
    return h, p, user, layout


def draw_channel(rng, n_users, n_antennas):
    rows = (rng.standard_normal((n_users, n_antennas))
            + 1j * rng.standard_normal((n_users, n_antennas))) / np.sqrt(2)
    return ChannelRealization(rows)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
