"""First-order time-lag dynamics: exact simulation, closed forms, warping.

A time-lag system is the scalar linear recursion

    z_t = a * z_{t-1} + (1 - a) * x_t,        0 < a < 1,

which is the zero-order-hold discretization of exponential relaxation toward
a piecewise-constant input.  Trajectories store the initial state at index 0,
so simulating N inputs yields N + 1 values.

Everything here is pure 64-bit arithmetic with no hidden state; these
trajectories are the ground truth that every recurrent-network construction
in this package is verified against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "TimeLagSystem",
    "NewtonCooling",
    "timelag_step",
    "simulate_timelag",
    "timelag_closed_form",
    "warp_retention",
    "zoh_discretize",
    "newton_solution",
]


def _check_retention(a: float) -> float:
    a = float(a)
    if not (0.0 < a < 1.0):
        raise DomainError(f"retention coefficient must lie in (0, 1), got {a}")
    return a


@dataclass(frozen=True)
class TimeLagSystem:
    """Retention coefficient and initial state of a time-lag recursion.

    ``a`` weighs the previous state; ``1 - a`` weighs the current input.
    """

    a: float
    z0: float

    def __post_init__(self) -> None:
        _check_retention(self.a)
        if not math.isfinite(self.z0):
            raise DomainError(f"initial state must be finite, got {self.z0}")

    def warped(self, gamma: float) -> "TimeLagSystem":
        """System with retention raised to ``gamma``; same initial state."""
        return TimeLagSystem(warp_retention(self.a, gamma), self.z0)


@dataclass(frozen=True)
class NewtonCooling:
    """Exponential cooling toward a constant ambient temperature.

    ``k`` is the cooling constant (1/time-step); ``1/k`` is the
    characteristic lag time of the system.
    """

    T0: float
    Ta: float
    k: float

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise DomainError(f"cooling constant must be positive, got {self.k}")

    def as_timelag(self, dt: float = 1.0) -> TimeLagSystem:
        """Equivalent discrete system: retention e^{-k dt}, state T0."""
        return TimeLagSystem(zoh_discretize(self.k, dt), self.T0)


def timelag_step(z_prev: float, a: float, x: float) -> float:
    """One update of the recursion: ``a*z_prev + (1-a)*x``."""
    a = _check_retention(a)
    return a * z_prev + (1.0 - a) * x


def simulate_timelag(sys: TimeLagSystem, xs) -> np.ndarray:
    """Iterate the recursion over inputs ``xs``.

    Returns the trajectory of length ``len(xs) + 1`` with the initial state
    at index 0.  Inputs must be finite.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 1:
        raise DomainError(f"inputs must be one-dimensional, got shape {xs.shape}")
    if xs.size and not np.all(np.isfinite(xs)):
        raise DomainError("inputs contain non-finite values")
    out = np.empty(xs.size + 1, dtype=np.float64)
    out[0] = sys.z0
    z = sys.z0
    a = sys.a
    for t, x in enumerate(xs, start=1):
        z = a * z + (1.0 - a) * x
        out[t] = z
    return out


def timelag_closed_form(sys: TimeLagSystem, xs, t: int) -> float:
    """State at index ``t`` via the geometric-sum closed form.

    Evaluates ``a^t z0 + (1-a) * sum_{k=0}^{t-1} a^k x_{t-k}``, which equals
    the iterated simulation up to accumulated rounding.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if not 1 <= t <= xs.size:
        raise IndexError(f"index {t} outside 1..{xs.size}")
    a = sys.a
    powers = a ** np.arange(t)
    # x_{t-k} for k = 0..t-1 is xs reversed up to t (xs[0] holds x_1).
    tail = xs[:t][::-1]
    return float(a**t * sys.z0 + (1.0 - a) * np.dot(powers, tail))


def warp_retention(a: float, gamma: float) -> float:
    """Rescale the characteristic timescale by raising ``a`` to ``gamma``.

    ``gamma > 1`` lowers retention (faster equilibration), ``gamma < 1``
    raises it.  The result stays inside (0, 1).
    """
    a = _check_retention(a)
    if not gamma > 0:
        raise DomainError(f"warp factor must be positive, got {gamma}")
    return a**gamma


def zoh_discretize(rate: float, dt: float) -> float:
    """Retention coefficient ``e^{-rate*dt}`` for a continuous decay rate.

    The input is held constant over each sampling interval of length ``dt``.
    """
    if not rate > 0:
        raise DomainError(f"rate must be positive, got {rate}")
    if not dt > 0:
        raise DomainError(f"step length must be positive, got {dt}")
    return math.exp(-rate * dt)


def newton_solution(nc: NewtonCooling, t: float) -> float:
    """Exact temperature at time ``t``: ``(1-e^{-kt}) Ta + e^{-kt} T0``."""
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    decay = math.exp(-nc.k * t)
    return (1.0 - decay) * nc.Ta + decay * nc.T0
