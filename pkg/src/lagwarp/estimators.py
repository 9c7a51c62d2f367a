"""Scikit-learn style estimators wrapping the network and warp searches.

``X`` is an hourly feature matrix of shape (n_hours, n_features) and ``y``
a target vector of the same length with NaN marking unobserved hours, so
sparsely labeled series fit the standard ``fit(X, y)`` / ``predict(X)``
surface.  Early stopping uses the trailing ``validation_fraction`` of the
series (time-ordered, never shuffled).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils import check_array

from .errors import EmptyDataError
from .rnn import Architecture, Network, network_forward
from .training import FreezeSpec, SparseSeries, TrainingConfig, init_network, make_windows, train
from .warp import WarpGrid, grid_search_timewarp, timewarp_finetune

__all__ = ["RnnRegressor", "TimeWarpSearch", "TimeWarpFineTune"]


def _check_series_xy(X, y):
    """Validate an (hourly features, sparse target) pair."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    return X, y


def _as_series(X, y) -> SparseSeries:
    return SparseSeries.from_target(np.arange(X.shape[0]), X, y)


def _split_tail(series: SparseSeries, fraction: float, window: int):
    """Time-ordered split: head for training, tail for validation."""
    n = len(series)
    n_val = max(window, int(round(n * fraction)))
    n_train = n - n_val
    if n_train < window:
        raise EmptyDataError(
            f"series of length {n} is too short to split off a validation tail "
            f"(window {window}, validation fraction {fraction})"
        )
    head = SparseSeries(
        series.t[:n_train], series.features[:n_train], series.target[:n_train], series.mask[:n_train]
    )
    tail = SparseSeries(
        series.t[n_train:], series.features[n_train:], series.target[n_train:], series.mask[n_train:]
    )
    return head, tail


class _SeriesPredictorMixin:
    """Shared predict/score over hourly series with sparse targets."""

    def predict(self, X):
        if not hasattr(self, "network_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")
        X = check_array(X, dtype=np.float64, ensure_2d=True)
        return network_forward(self.network_, X)

    def score(self, X, y, sample_weight=None):
        """R² on observed (non-NaN) targets."""
        from .diagnostics import metrics

        X, y = _check_series_xy(X, y)
        observed = np.isfinite(y)
        if not observed.any():
            raise EmptyDataError("scoring needs at least one observed target")
        return metrics(y[observed], self.predict(X)[observed]).r2


class RnnRegressor(_SeriesPredictorMixin, RegressorMixin, BaseEstimator):
    """Recurrent sequence-to-sequence regressor trained on rolling windows.

    Parameters mirror the training loop: rolling windows of ``window`` steps
    every ``stride`` hours, mini-batch gradient descent, early stopping with
    the given patience on the validation tail, and best-weights restoration.

    Attributes after fitting: ``network_`` (parameter container),
    ``history_`` (per-epoch losses), ``n_features_in_``.
    """

    def __init__(
        self,
        units: int = 64,
        dense_units: tuple = (32, 16),
        cell: str = "lstm",
        window: int = 48,
        stride: int = 12,
        epochs: int = 100,
        patience: int = 5,
        learning_rate: float = 0.01,
        batch_size: int = 32,
        optimizer: str = "sgd",
        clip_norm: float | None = 1.0,
        validation_fraction: float = 0.2,
        seed: int = 0,
    ):
        self.units = units
        self.dense_units = dense_units
        self.cell = cell
        self.window = window
        self.stride = stride
        self.epochs = epochs
        self.patience = patience
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.optimizer = optimizer
        self.clip_norm = clip_norm
        self.validation_fraction = validation_fraction
        self.seed = seed

    def _config(self) -> TrainingConfig:
        return TrainingConfig(
            window=self.window,
            stride=self.stride,
            batch_size=self.batch_size,
            epochs=self.epochs,
            patience=self.patience,
            learning_rate=self.learning_rate,
            seed=self.seed,
            optimizer=self.optimizer,
            clip_norm=self.clip_norm,
        )

    def fit(self, X, y):
        X, y = _check_series_xy(X, y)
        series = _as_series(X, y)
        head, tail = _split_tail(series, self.validation_fraction, self.window)
        cfg = self._config()
        samples = make_windows(head, cfg.window, cfg.stride)
        arch = Architecture(
            features=X.shape[1],
            cell=self.cell,
            units=self.units,
            dense_units=tuple(self.dense_units) + (1,),
        )
        net = init_network(arch, self.seed)
        self.network_, self.history_ = train(net, samples, tail, cfg)
        self.n_features_in_ = X.shape[1]
        return self


class TimeWarpSearch(_SeriesPredictorMixin, RegressorMixin, BaseEstimator):
    """Timescale transfer for a pretrained LSTM network, no fine-tuning.

    Fits only two scalars: uniform additive shifts for the forget and input
    gate biases, selected by exhaustive search for the lowest training RMSE
    at observed target hours.

    Attributes after fitting: ``best_shift_``, ``best_rmse_``, ``results_``
    (the full (shift, rmse) table), and ``network_`` (shifted copy of the
    pretrained network).
    """

    def __init__(
        self,
        network: Network,
        grid_size: int = 25,
        grid_low: float = -5.0,
        grid_high: float = 5.0,
        f_values: tuple | None = None,
        i_values: tuple | None = None,
    ):
        self.network = network
        self.grid_size = grid_size
        self.grid_low = grid_low
        self.grid_high = grid_high
        self.f_values = f_values
        self.i_values = i_values

    def _grid(self) -> WarpGrid:
        if self.f_values is not None or self.i_values is not None:
            base = WarpGrid.evenly_spaced(self.grid_size, self.grid_low, self.grid_high)
            return WarpGrid(
                self.f_values if self.f_values is not None else base.f_values,
                self.i_values if self.i_values is not None else base.i_values,
            )
        return WarpGrid.evenly_spaced(self.grid_size, self.grid_low, self.grid_high)

    def fit(self, X, y):
        from .warp import apply_bias_shift

        X, y = _check_series_xy(X, y)
        result = grid_search_timewarp(self.network, _as_series(X, y), self._grid())
        self.best_shift_ = result.best_shift
        self.best_rmse_ = result.best_rmse
        self.results_ = result.table
        self.network_ = apply_bias_shift(self.network, result.best_shift)
        self.n_features_in_ = X.shape[1]
        return self


class TimeWarpFineTune(_SeriesPredictorMixin, RegressorMixin, BaseEstimator):
    """Timescale transfer with per-cell fine-tuning, selected on validation RMSE.

    Every grid cell shifts the pretrained gate biases and then fine-tunes
    the network on the training windows, with the trailing
    ``validation_fraction`` of the series monitoring early stopping and
    ranking the cells.

    Attributes after fitting: ``best_shift_``, ``best_rmse_``, ``results_``,
    and ``network_`` (the winning cell's fine-tuned network).
    """

    def __init__(
        self,
        network: Network,
        grid_size: int = 5,
        grid_low: float = -5.0,
        grid_high: float = 5.0,
        window: int = 48,
        stride: int = 12,
        epochs: int = 100,
        patience: int = 5,
        learning_rate: float = 0.01,
        batch_size: int = 32,
        optimizer: str = "sgd",
        clip_norm: float | None = 1.0,
        validation_fraction: float = 0.2,
        freeze_recurrent: bool = False,
        freeze_dense: bool = False,
        seed: int = 0,
        n_jobs: int = 1,
    ):
        self.network = network
        self.grid_size = grid_size
        self.grid_low = grid_low
        self.grid_high = grid_high
        self.window = window
        self.stride = stride
        self.epochs = epochs
        self.patience = patience
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.optimizer = optimizer
        self.clip_norm = clip_norm
        self.validation_fraction = validation_fraction
        self.freeze_recurrent = freeze_recurrent
        self.freeze_dense = freeze_dense
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X, y = _check_series_xy(X, y)
        series = _as_series(X, y)
        head, tail = _split_tail(series, self.validation_fraction, self.window)
        cfg = TrainingConfig(
            window=self.window,
            stride=self.stride,
            batch_size=self.batch_size,
            epochs=self.epochs,
            patience=self.patience,
            learning_rate=self.learning_rate,
            seed=self.seed,
            optimizer=self.optimizer,
            clip_norm=self.clip_norm,
            freeze=FreezeSpec(not self.freeze_recurrent, not self.freeze_dense),
        )
        grid = WarpGrid.evenly_spaced(self.grid_size, self.grid_low, self.grid_high)
        self.network_, result = timewarp_finetune(
            self.network, head, tail, grid, cfg, n_jobs=self.n_jobs
        )
        self.best_shift_ = result.best_shift
        self.best_rmse_ = result.best_rmse
        self.results_ = result.table
        self.n_features_in_ = X.shape[1]
        return self
