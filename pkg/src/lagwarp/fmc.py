"""Fuel-moisture physics baselines.

Dead-fuel moisture content (FMC, percent of dry weight) relaxes toward a
weather-driven equilibrium with a characteristic lag time set by the fuel
class: roughly the hours needed to cover 63% of the distance to
equilibrium.  This module provides the wetting/drying equilibrium formulas,
the per-class time-lag coefficients, and the four-case forecasting ODE with
its published calibration (rain threshold 0.05 mm/h, saturation 250%, rain
delay 14 h, saturation intensity 8 mm/h).

The forecast runs open loop: cases are selected once per step from the
conditions at the step start (zero-order hold) and each step applies the
exact exponential update for its case, so relaxation never overshoots its
target and rain never pushes moisture above saturation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyDataError

__all__ = [
    "FuelClass",
    "FmcOdeHyper",
    "WeatherRow",
    "equilibria",
    "fuel_class_coeffs",
    "fmc_ode_step",
    "fmc_forecast",
]


@dataclass(frozen=True)
class FuelClass:
    """Characteristic lag time in hours (1, 10, 100, 1000, or any positive value)."""

    t_lag: float

    def __post_init__(self) -> None:
        if not self.t_lag > 0:
            raise DomainError(f"lag time must be positive, got {self.t_lag}")


@dataclass(frozen=True)
class FmcOdeHyper:
    """Calibrated constants of the rain case.

    r0: threshold rain intensity (mm/h) below which rain is ignored.
    S: saturation moisture content (percent).
    Tr: asymptotic delay time under very intense rain (hours).
    rs: rain intensity at which wetting reaches 63% of its maximal rate.
    """

    r0: float = 0.05
    S: float = 250.0
    Tr: float = 14.0
    rs: float = 8.0

    def __post_init__(self) -> None:
        if min(self.r0, self.S, self.Tr, self.rs) <= 0:
            raise DomainError("all rain-model constants must be positive")


@dataclass(frozen=True)
class WeatherRow:
    """One hour of weather: air temperature (C), relative humidity (%),
    rain accumulation (mm/h), and optional solar (W/m2) and wind (m/s)."""

    temp_c: float
    rh: float
    rain: float
    solar: float | None = None
    wind: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.rh <= 100.0:
            raise DomainError(f"relative humidity must lie in [0, 100], got {self.rh}")
        if self.rain < 0:
            raise DomainError(f"rain must be nonnegative, got {self.rain}")


def equilibria(temp_c: float, rh: float) -> tuple[float, float]:
    """Drying and wetting equilibrium moisture contents (percent).

    Empirical fits in temperature (C) and relative humidity (%); both share
    the 0.18*(21.1 - T)*(1 - e^{-0.115 RH}) temperature correction, and the
    drying value is the larger one under ordinary conditions.
    """
    if not 0.0 <= rh <= 100.0:
        raise DomainError(f"relative humidity must lie in [0, 100], got {rh}")
    shared = 0.18 * (21.1 - temp_c) * (1.0 - math.exp(-0.115 * rh))
    e_d = 0.924 * rh**0.679 + 0.000499 * math.exp(0.1 * rh) + shared
    e_w = 0.618 * rh**0.753 + 0.000454 * math.exp(0.1 * rh) + shared
    return e_d, e_w


def fuel_class_coeffs(fc: FuelClass) -> tuple[float, float]:
    """Input and retention weights ``(1 - e^{-1/T}, e^{-1/T})`` for a fuel class.

    These are the coefficients of the hourly update
    ``m' = (1 - e^{-1/T}) * E + e^{-1/T} * m``; the two weights sum to 1.
    """
    retention = math.exp(-1.0 / fc.t_lag)
    return 1.0 - retention, retention


def fmc_ode_step(
    m: float,
    w: WeatherRow,
    e: tuple[float, float],
    fc: FuelClass,
    hyper: FmcOdeHyper,
    dt: float = 1.0,
) -> float:
    """Advance the moisture one step with conditions frozen at the step start.

    Case selection (rain vs. threshold, moisture vs. the two equilibria)
    happens once per step; the selected case then applies its exact
    exponential update:

    - soaking rain relaxes toward saturation at a rate growing with
      intensity;
    - drying relaxes toward the drying equilibrium at rate 1/T;
    - wetting relaxes toward the wetting equilibrium at rate 1/T;
    - between the equilibria with no rain, moisture holds steady.
    """
    if m < 0:
        raise DomainError(f"moisture content must be nonnegative, got {m}")
    if not dt > 0:
        raise DomainError(f"step length must be positive, got {dt}")
    e_d, e_w = e
    if e_w > e_d:
        raise DomainError(f"wetting equilibrium {e_w} exceeds drying equilibrium {e_d}")
    if w.rain > hyper.r0:
        rate = (1.0 - math.exp((hyper.r0 - w.rain) / hyper.rs)) / hyper.Tr
        return hyper.S + (m - hyper.S) * math.exp(-rate * dt)
    if m > e_d:
        return e_d + (m - e_d) * math.exp(-dt / fc.t_lag)
    if m < e_w:
        return e_w + (m - e_w) * math.exp(-dt / fc.t_lag)
    return m


def fmc_forecast(m0: float, weather, fc: FuelClass, hyper: FmcOdeHyper | None = None) -> np.ndarray:
    """Open-loop hourly forecast from an initial moisture content.

    Equilibria are recomputed from each weather row; the result has one
    entry per hour plus the initial value at index 0.
    """
    if hyper is None:
        hyper = FmcOdeHyper()
    weather = list(weather)
    if not weather:
        raise EmptyDataError("forecast needs at least one weather row")
    out = np.empty(len(weather) + 1)
    out[0] = m0
    m = float(m0)
    for idx, row in enumerate(weather, start=1):
        m = fmc_ode_step(m, row, equilibria(row.temp_c, row.rh), fc, hyper)
        out[idx] = m
    return out
