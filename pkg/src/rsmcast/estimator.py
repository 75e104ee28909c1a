"""scikit-learn style front end for the max-min multicast precoder design."""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import ao
from .model import ChannelRealization, build_group_layout
from .validation import as_init_strategy, as_mode, as_scheme, check_channel_matrix, check_group_sizes


class MaxMinPrecoder(BaseEstimator):
    """Design a fair multicast precoder from a channel matrix.

    ``fit`` consumes a complex (n_users, n_antennas) channel matrix, runs the
    alternating WMSE optimization (with a power-split grid search for the SC
    and MC schemes when ``alpha`` is not fixed), and exposes the converged
    precoder and exact rate split as fitted attributes. ``score`` evaluates
    the fitted precoder on a (possibly different) channel matrix and returns
    the achieved max-min rate, so the estimator composes with scikit-learn
    model-selection tooling.

    Parameters
    ----------
    scheme : {"SC", "CC", "MC"}, default "CC"
        Transmit construction for the shared broadcast stream.
    group_sizes : sequence of int or None, default None
        Multicast group sizes (canonicalized ascending, users assigned
        contiguously). None puts every user in a single group.
    mode : {"RS", "NoRS"}, default "RS"
        Whether group messages may borrow shared-stream capacity.
    tx_power : float, default 1.0
        Transmit power budget in linear units (equals the transmit SNR under
        the unit-noise convention).
    rc_threshold : float, default 0.0
        Minimum rate reserved for the system-wide broadcast message.
    alpha : float or None, default None
        Fixed shared-layer power ratio for SC/MC; None searches
        ``alpha_grid``. Ignored for CC.
    alpha_grid : sequence of float or None, default None
        Candidate power splits; None uses 0.05..0.95 in steps of 0.05.
    epsilon : float, default 1e-4
        Stop once the surrogate objective moves by at most this much.
    max_iters : int, default 500
        Iteration cap of the alternating loop.
    init : {"seeded-random", "matched-filter"}, default "seeded-random"
        Precoder initialization strategy.
    random_state : int or None, default None
        Seed of the random initializer; None means 0 (deterministic).

    Attributes
    ----------
    precoder_ : PrecoderSet
    rates_ : RateAllocation
    mmf_rate_ : float
    common_rate_ : float
    alpha_ : float or None
    trace_ : list of float
    n_iter_ : int
    converged_ : bool
    status_ : str
    n_features_in_ : int
    """

    def __init__(self, scheme="CC", group_sizes=None, mode="RS", tx_power=1.0,
                 rc_threshold=0.0, alpha=None, alpha_grid=None, epsilon=1e-4,
                 max_iters=500, init="seeded-random", random_state=None):
        self.scheme = scheme
        self.group_sizes = group_sizes
        self.mode = mode
        self.tx_power = tx_power
        self.rc_threshold = rc_threshold
        self.alpha = alpha
        self.alpha_grid = alpha_grid
        self.epsilon = epsilon
        self.max_iters = max_iters
        self.init = init
        self.random_state = random_state

    def _config(self) -> ao.AoConfig:
        grid = (tuple(float(a) for a in self.alpha_grid)
                if self.alpha_grid is not None else ao.DEFAULT_ALPHA_GRID)
        return ao.AoConfig(
            epsilon=self.epsilon,
            max_iters=self.max_iters,
            init_strategy=as_init_strategy(self.init),
            alpha_grid=grid,
            init_seed=0 if self.random_state is None else int(self.random_state),
        )

    def fit(self, X, y=None):
        """Design the precoder for the given channel matrix."""
        X = check_channel_matrix(X)
        scheme = as_scheme(self.scheme)
        mode = as_mode(self.mode)
        sizes = check_group_sizes(
            self.group_sizes if self.group_sizes is not None else (X.shape[0],),
            n_users=X.shape[0],
        )
        layout = build_group_layout(sizes)
        ch = ChannelRealization(X)
        config = self._config()

        if scheme.uses_power_split and self.alpha is None:
            alpha_star, result = ao.optimize_alpha(
                ch, layout, scheme, self.tx_power, self.rc_threshold, mode, config)
        else:
            alpha_star = float(self.alpha) if scheme.uses_power_split else None
            result = ao.run_ao(ch, layout, scheme, alpha_star, self.tx_power,
                               self.rc_threshold, mode, config)
        if result.status is ao.SolveStatus.INFEASIBLE:
            raise ValueError(
                f"broadcast threshold {self.rc_threshold} is infeasible at "
                f"tx_power={self.tx_power} on this channel"
            )

        self.layout_ = layout
        self.precoder_ = result.precoder
        self.rates_ = result.rates
        self.mmf_rate_ = result.rates.mmf_rate
        self.common_rate_ = result.rates.common_rate
        self.alpha_ = alpha_star
        self.trace_ = list(result.trace)
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.status_ = result.status.value
        self.n_features_in_ = X.shape[1]
        return self

    def score(self, X, y=None) -> float:
        """Exact max-min rate of the fitted precoder on the given channels.

        The shared-stream surplus over the broadcast threshold is
        re-distributed for the new channels. Returns ``-inf`` when the new
        channels cannot support the threshold at all.
        """
        check_is_fitted(self, "precoder_")
        X = check_channel_matrix(X)
        if X.shape != (self.layout_.n_users, self.n_features_in_):
            raise ValueError(
                f"expected a {(self.layout_.n_users, self.n_features_in_)} channel "
                f"matrix matching the fitted layout, got {X.shape}"
            )
        rates = ao.finalize_rates(ChannelRealization(X), self.layout_, self.precoder_,
                                  self.rc_threshold, as_mode(self.mode))
        return float("-inf") if rates is None else rates.mmf_rate
