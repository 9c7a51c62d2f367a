"""Provable weight settings that make recurrent cells reproduce time-lag systems.

Four constructions, each an executable counterpart of a proof:

* a 1-unit linear simple RNN that reproduces the recursion exactly;
* an exact reweighting of that RNN for a warped timescale;
* a 1-unit tanh RNN that approximates the recursion within any target error
  after rescaling sequences into the near-linear range of tanh;
* a 1-unit linear LSTM whose gate biases encode the retention coefficient,
  with the output-gate bias controlling the approximation error, plus the
  bias rewrite that warps its timescale.

The LSTM error guarantee covers steps 1..N; at step 0 the constructed hidden
state is 0 by design while the cell state carries the initial condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rnn import LstmParams, RecurrentState, SimpleRnnParams, logit, sigmoid, simple_rnn_forward

__all__ = [
    "TanhScaling",
    "LstmErrorBudget",
    "build_exact_simplernn",
    "warp_simplernn",
    "tanh_scaling_delta",
    "tanh_error_bound",
    "build_tanh_simplernn",
    "run_scaled_tanh_rnn",
    "default_output_gate_bias",
    "build_linear_lstm",
    "warp_lstm_theoretical",
    "lstm_error_bound",
]


def _check_retention(a: float) -> float:
    a = float(a)
    if not (0.0 < a < 1.0):
        raise DomainError(f"retention coefficient must lie in (0, 1), got {a}")
    return a


@dataclass(frozen=True)
class TanhScaling:
    """Linear rescaling that maps sequences into tanh's near-linear range.

    Inputs are multiplied by ``delta / bound`` before each step and hidden
    states by ``bound / delta`` after, where ``bound`` dominates both the
    input and state sequences.
    """

    delta: float
    bound: float

    def __post_init__(self) -> None:
        if not (self.delta > 0 and self.bound > 0):
            raise DomainError("scaling radius and bound must be positive")

    @property
    def scale_factor(self) -> float:
        return self.delta / self.bound

    def scale(self, x):
        return np.asarray(x, dtype=np.float64) * self.scale_factor

    def unscale(self, x):
        return np.asarray(x, dtype=np.float64) / self.scale_factor


@dataclass(frozen=True)
class LstmErrorBudget:
    """Target error, sequence bound, and the output-gate bias meeting them.

    Valid when ``epsilon < M`` and ``b_o`` exceeds ``logit(1 - epsilon/M)``;
    the achieved worst-case error is then ``(1 - sigmoid(b_o)) * M``.
    """

    epsilon: float
    M: float
    b_o: float

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon < self.M):
            raise DomainError(f"need 0 < epsilon < M, got epsilon={self.epsilon}, M={self.M}")
        threshold = logit(1.0 - self.epsilon / self.M)
        if not self.b_o > threshold:
            raise DomainError(
                f"output gate bias {self.b_o} does not exceed threshold {threshold:.6g}"
            )

    @property
    def error_bound(self) -> float:
        return lstm_error_bound(self.b_o, self.M)


def build_exact_simplernn(a: float, z0: float) -> tuple[SimpleRnnParams, float]:
    """1-unit linear RNN that reproduces the time-lag recursion exactly.

    Recurrent weight ``a``, input weight ``1 - a``, zero bias, initial hidden
    state ``z0``.  Returns ``(params, h0)``.
    """
    a = _check_retention(a)
    params = SimpleRnnParams(
        w_x=np.array([[1.0 - a]]),
        w_h=np.array([[a]]),
        b=np.zeros(1),
        activation="linear",
    )
    return params, float(z0)


def warp_simplernn(params: SimpleRnnParams, gamma: float) -> SimpleRnnParams:
    """Reweight an exact 1-unit RNN so it follows the warped recursion.

    The recurrent weight becomes ``w_h**gamma`` and the input weight
    ``1 - (1 - w_x)**gamma``; the warp is exact, not approximate.
    """
    if not gamma > 0:
        raise DomainError(f"warp factor must be positive, got {gamma}")
    if params.units != 1:
        raise DomainError("warping is defined for the 1-unit construction")
    w_h = float(params.w_h[0, 0])
    w_x = float(params.w_x[0, 0])
    if not (0.0 < w_h < 1.0):
        raise DomainError(f"recurrent weight must lie in (0, 1), got {w_h}")
    if abs(w_h + w_x - 1.0) > 1e-12:
        raise DomainError("weights do not form an exact time-lag construction (w_h + w_x != 1)")
    return SimpleRnnParams(
        w_x=np.array([[1.0 - (1.0 - w_x) ** gamma]]),
        w_h=np.array([[w_h**gamma]]),
        b=np.zeros(1),
        activation=params.activation,
    )


def tanh_scaling_delta(epsilon: float, B: float, a: float, N: int) -> float:
    """Scaling radius meeting the tanh approximation target.

    Returns ``0.99 * sqrt(epsilon * (3/B) * (1-a) / (1-a**N))``; the 0.99
    factor keeps the strict inequality the guarantee needs.
    """
    a = _check_retention(a)
    if not (epsilon > 0 and B > 0):
        raise DomainError("error target and bound must be positive")
    if N < 1:
        raise DomainError(f"horizon must be at least 1, got {N}")
    return 0.99 * math.sqrt(epsilon * (3.0 / B) * (1.0 - a) / (1.0 - a**N))


def tanh_error_bound(delta: float, B: float, a: float, N: int) -> float:
    """Worst-case error of the rescaled tanh RNN over horizon ``N``.

    Equals ``(B * delta**2 / 3) * (1 - a**N) / (1 - a)``.
    """
    a = _check_retention(a)
    return (B * delta**2 / 3.0) * (1.0 - a**N) / (1.0 - a)


def build_tanh_simplernn(
    a: float, z0: float, epsilon: float, B: float, N: int
) -> tuple[SimpleRnnParams, TanhScaling]:
    """1-unit tanh RNN approximating the recursion within ``epsilon``.

    ``B`` must dominate ``|z0|`` and every input; the guarantee holds for
    sequences of length up to ``N``.  Callers rescale inputs by
    ``scaling.scale`` before the step and hidden states by
    ``scaling.unscale`` after (see :func:`run_scaled_tanh_rnn`).
    """
    a = _check_retention(a)
    if abs(z0) > B:
        raise DomainError(f"|z0|={abs(z0)} exceeds the declared bound B={B}")
    delta = tanh_scaling_delta(epsilon, B, a, N)
    params = SimpleRnnParams(
        w_x=np.array([[1.0 - a]]),
        w_h=np.array([[a]]),
        b=np.zeros(1),
        activation="tanh",
    )
    return params, TanhScaling(delta=delta, bound=B)


def run_scaled_tanh_rnn(
    params: SimpleRnnParams, scaling: TanhScaling, z0: float, xs
) -> np.ndarray:
    """Full rescale -> run -> unscale pipeline in original units.

    Returns the approximate trajectory of length ``len(xs) + 1`` with
    ``z0`` at index 0.
    """
    xs = np.asarray(xs, dtype=np.float64)
    hs = simple_rnn_forward(params, scaling.scale(xs)[:, None], scaling.scale(z0))
    return scaling.unscale(hs[:, 0])


def default_output_gate_bias(epsilon: float, M: float) -> float:
    """Smallest integer bias strictly above ``logit(1 - epsilon/M)``.

    Rounding the threshold up to the next integer keeps the error guarantee
    strict while avoiding needlessly saturated gates.
    """
    if not (0.0 < epsilon < M):
        raise DomainError(f"need 0 < epsilon < M, got epsilon={epsilon}, M={M}")
    return float(math.floor(logit(1.0 - epsilon / M)) + 1.0)


def build_linear_lstm(
    a: float,
    z0: float,
    epsilon: float,
    M: float,
    output_gate_bias: float | None = None,
) -> tuple[LstmParams, RecurrentState]:
    """1-unit linear-activation LSTM tracking the recursion within ``epsilon``.

    Gate biases encode the retention coefficient: forget bias ``logit(a)``,
    input bias ``logit(1-a)``; the candidate passes the input straight
    through.  The output-gate bias (default: next integer above
    ``logit(1 - epsilon/M)``) controls how closely the hidden state tracks
    the cell state, and with it the worst-case error
    ``(1 - sigmoid(b_o)) * M`` for sequences bounded by ``M``.

    The initial recurrent state is ``[c, h] = [z0, 0]``.
    """
    a = _check_retention(a)
    if not (0.0 < epsilon < M):
        raise DomainError(f"need 0 < epsilon < M, got epsilon={epsilon}, M={M}")
    if abs(z0) > M:
        raise DomainError(f"|z0|={abs(z0)} exceeds the declared bound M={M}")
    if output_gate_bias is None:
        output_gate_bias = default_output_gate_bias(epsilon, M)
    # Validates that the chosen bias actually meets the budget.
    LstmErrorBudget(epsilon=epsilon, M=M, b_o=output_gate_bias)
    zeros = np.zeros((1, 1))
    params = LstmParams(
        w_x={"f": zeros.copy(), "i": zeros.copy(), "g": np.ones((1, 1)), "o": zeros.copy()},
        w_h={g: zeros.copy() for g in ("f", "i", "g", "o")},
        b={
            "f": np.array([logit(a)]),
            "i": np.array([logit(1.0 - a)]),
            "g": np.zeros(1),
            "o": np.array([float(output_gate_bias)]),
        },
        candidate_activation="linear",
        cell_output_activation="linear",
    )
    state = RecurrentState(h=np.zeros(1), c=np.array([float(z0)]))
    return params, state


def warp_lstm_theoretical(params: LstmParams, gamma: float) -> LstmParams:
    """Warp a constructed linear LSTM by rewriting its forget/input biases.

    The new biases are ``logit(sigmoid(b_f)**gamma)`` and
    ``logit(1 - (1 - sigmoid(b_i))**gamma)``; every other parameter is
    untouched, and the warped cell tracks the warped recursion within the
    same error bound.
    """
    if not gamma > 0:
        raise DomainError(f"warp factor must be positive, got {gamma}")
    if params.candidate_activation != "linear" or params.cell_output_activation != "linear":
        raise DomainError("theoretical warping is defined for the linear-activation construction")
    out = params.copy()
    out.b["f"] = np.asarray(logit(warp_retention_vec(sigmoid(params.b["f"]), gamma)))
    out.b["i"] = np.asarray(logit(1.0 - warp_retention_vec(1.0 - sigmoid(params.b["i"]), gamma)))
    return out


def warp_retention_vec(a, gamma: float):
    """Elementwise ``a**gamma`` with the (0, 1) domain check."""
    arr = np.asarray(a, dtype=np.float64)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("retention values must lie in (0, 1)")
    return arr**gamma


def lstm_error_bound(b_o: float, M: float) -> float:
    """Worst-case tracking error ``(1 - sigmoid(b_o)) * M``."""
    if not M > 0:
        raise DomainError(f"bound must be positive, got {M}")
    return (1.0 - sigmoid(b_o)) * M
