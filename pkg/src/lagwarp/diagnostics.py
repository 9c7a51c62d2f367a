"""Temporal-structure diagnostics and regression metrics.

The autocovariance estimator normalizes by N at every lag so that the same
scaling cancels in the autocorrelation ratio; partial autocorrelations come
from the Durbin-Levinson recursion over the empirical ACF.  The white-noise
band is the large-sample ±1.96/sqrt(N) threshold at all lags.

These are the tools used to check that warping a model actually changes the
characteristic timescale of its predictions: a first-order system shows an
exponentially decaying ACF and a single lag-1 PACF spike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyDataError, ShapeError

__all__ = [
    "AcfResult",
    "Metrics",
    "autocovariance",
    "acf",
    "pacf",
    "pacf_from_acf",
    "ar1_simulate",
    "metrics",
    "interpolate_predictions",
]


@dataclass(frozen=True)
class AcfResult:
    """Correlations per lag 0..K with a symmetric white-noise 95% band."""

    lags: np.ndarray
    values: np.ndarray
    ci_bound: float


@dataclass(frozen=True)
class Metrics:
    """RMSE, bias (observed minus predicted; positive = underprediction),
    and the coefficient of determination.  ``r2`` is NaN when the observed
    series is constant."""

    rmse: float
    bias: float
    r2: float
    n: int


def _as_series(series) -> np.ndarray:
    z = np.asarray(series, dtype=np.float64)
    if z.ndim != 1:
        raise ShapeError(f"series must be one-dimensional, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise DomainError("series contains non-finite values")
    return z


def autocovariance(series, k: int) -> float:
    """Empirical autocovariance at lag ``k`` with denominator N.

    ``(1/N) * sum_{t=1}^{N-k} (z_t - mean)(z_{t+k} - mean)``.
    """
    z = _as_series(series)
    n = z.size
    if not 0 <= k < n:
        raise IndexError(f"lag {k} outside 0..{n - 1}")
    centered = z - z.mean()
    return float(np.dot(centered[: n - k], centered[k:]) / n)


def acf(series, max_lag: int) -> AcfResult:
    """Empirical autocorrelation for lags 0..max_lag.

    Values are autocovariances scaled by the lag-0 autocovariance, so
    ``values[0] == 1``.  A constant series has zero variance and no defined
    autocorrelation.
    """
    z = _as_series(series)
    n = z.size
    if n < 2:
        raise EmptyDataError("autocorrelation needs at least two points")
    if not 0 <= max_lag < n:
        raise IndexError(f"lag {max_lag} outside 0..{n - 1}")
    centered = z - z.mean()
    var = float(np.dot(centered, centered) / n)
    if var == 0.0:
        raise DomainError("series is constant; autocorrelation is undefined")
    values = np.array(
        [np.dot(centered[: n - k], centered[k:]) / n / var for k in range(max_lag + 1)]
    )
    return AcfResult(np.arange(max_lag + 1), values, 1.96 / math.sqrt(n))


def pacf_from_acf(rho) -> np.ndarray:
    """Partial autocorrelations from an autocorrelation sequence.

    ``rho`` is indexed 0..K with ``rho[0] == 1``; the result has the same
    indexing, with the convention ``pacf[0] == 1``.  Uses the
    Durbin-Levinson recursion, so feeding the exact AR(1) autocorrelations
    ``beta**k`` yields ``beta`` at lag 1 and zero beyond.
    """
    rho = np.asarray(rho, dtype=np.float64)
    if rho.ndim != 1 or rho.size < 1:
        raise ShapeError("autocorrelation input must be a non-empty 1-d sequence")
    if abs(rho[0] - 1.0) > 1e-12:
        raise DomainError("autocorrelation sequence must start at 1")
    k_max = rho.size - 1
    out = np.ones(k_max + 1)
    if k_max == 0:
        return out
    phi_prev = np.array([rho[1]])
    out[1] = rho[1]
    for k in range(2, k_max + 1):
        num = rho[k] - np.dot(phi_prev, rho[k - 1 : 0 : -1])
        den = 1.0 - np.dot(phi_prev, rho[1:k])
        phi_kk = num / den
        phi = np.empty(k)
        phi[: k - 1] = phi_prev - phi_kk * phi_prev[::-1]
        phi[k - 1] = phi_kk
        out[k] = phi_kk
        phi_prev = phi
    return out


def pacf(series, max_lag: int) -> AcfResult:
    """Empirical partial autocorrelation for lags 0..max_lag.

    Requires ``max_lag < N/2`` so the recursion stays well conditioned; the
    confidence band matches :func:`acf`.
    """
    z = _as_series(series)
    if max_lag >= z.size / 2:
        raise IndexError(f"lag {max_lag} must be below half the series length {z.size}")
    base = acf(z, max_lag)
    return AcfResult(base.lags, pacf_from_acf(base.values), base.ci_bound)


def ar1_simulate(beta: float, n: int, seed: int) -> np.ndarray:
    """First-order autoregression with unit-variance Gaussian innovations.

    Starts from 0 and returns ``n`` generated values; ``|beta| < 1`` is
    required for stability.  Deterministic per seed.
    """
    if not abs(beta) < 1:
        raise DomainError(f"autoregressive coefficient must satisfy |beta| < 1, got {beta}")
    if n < 1:
        raise DomainError("length must be at least 1")
    eps = np.random.default_rng(seed).standard_normal(n)
    out = np.empty(n)
    z = 0.0
    for t in range(n):
        z = beta * z + eps[t]
        out[t] = z
    return out


def metrics(observed, predicted) -> Metrics:
    """RMSE, bias, and R² of predictions against observations.

    R² is one minus the ratio of mean squared error to the observed
    variance (denominator n, so predicting the mean scores exactly 0); it
    is reported as NaN when the observations are constant.
    """
    obs = _as_series(observed)
    pred = _as_series(predicted)
    if obs.shape != pred.shape:
        raise ShapeError(f"length mismatch: {obs.shape} vs {pred.shape}")
    if obs.size < 1:
        raise EmptyDataError("metrics need at least one pair")
    err = obs - pred
    mse = float(np.mean(err * err))
    var = float(np.mean((obs - obs.mean()) ** 2))
    r2 = 1.0 - mse / var if var > 0.0 else float("nan")
    return Metrics(rmse=math.sqrt(mse), bias=float(err.mean()), r2=r2, n=obs.size)


def interpolate_predictions(pred_times, preds, query_times) -> np.ndarray:
    """Linear interpolation of hourly predictions at fractional-hour times.

    Queries must lie inside [first, last] prediction time; no extrapolation
    is performed.
    """
    pred_times = np.asarray(pred_times, dtype=np.float64)
    preds = _as_series(preds)
    query = np.asarray(query_times, dtype=np.float64)
    if pred_times.shape != preds.shape:
        raise ShapeError("prediction times and values must align")
    if pred_times.size < 2:
        raise EmptyDataError("interpolation needs at least two prediction times")
    if np.any(np.diff(pred_times) <= 0):
        raise DomainError("prediction times must be strictly increasing")
    if np.any(query < pred_times[0]) or np.any(query > pred_times[-1]):
        raise DomainError("query times outside the prediction range; extrapolation is not performed")
    return np.interp(query, pred_times, preds)
