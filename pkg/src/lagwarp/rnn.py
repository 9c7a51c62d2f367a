"""Forward-pass kernels: simple RNN cells, LSTM cells, dense stacks.

Parameter containers are plain dataclasses over float64 numpy arrays and are
treated as immutable during inference; forward passes allocate their own
state, so concurrent evaluation of one network on different sequences is
safe.  Gate parameters are stored and serialized in the fixed order
(f, i, g, o): forget, input, candidate, output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DomainError, ShapeError

__all__ = [
    "ACTIVATIONS",
    "GATE_ORDER",
    "activation",
    "activation_deriv",
    "sigmoid",
    "logit",
    "SimpleRnnParams",
    "LstmParams",
    "DenseParams",
    "RecurrentState",
    "Network",
    "Architecture",
    "dense_stack_forward",
    "simple_rnn_step",
    "lstm_step",
    "simple_rnn_forward",
    "lstm_forward",
    "network_forward",
    "param_count",
    "iter_parameters",
]

ACTIVATIONS = ("sigmoid", "tanh", "relu", "linear")
GATE_ORDER = ("f", "i", "g", "o")


def sigmoid(x):
    """Numerically stable logistic function, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("activation input contains non-finite values")
    out = expit(x)
    return float(out) if out.ndim == 0 else out


def logit(p):
    """Inverse sigmoid ``ln(p / (1 - p))`` on the open interval (0, 1)."""
    arr = np.asarray(p, dtype=np.float64)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("logit argument must lie strictly inside (0, 1)")
    out = np.log(arr / (1.0 - arr))
    return float(out) if out.ndim == 0 else out


def activation(kind: str, x):
    """Apply the named activation elementwise.

    Stable for pre-activations up to |x| ~ 700; non-finite input raises.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("activation input contains non-finite values")
    if kind == "sigmoid":
        out = expit(x)
    elif kind == "tanh":
        out = np.tanh(x)
    elif kind == "relu":
        out = np.maximum(x, 0.0)
    elif kind == "linear":
        out = x
    else:
        raise DomainError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")
    return float(out) if out.ndim == 0 else out


def activation_deriv(kind: str, pre, out):
    """Derivative w.r.t. the pre-activation, using cached in/outputs."""
    if kind == "sigmoid":
        return out * (1.0 - out)
    if kind == "tanh":
        return 1.0 - out * out
    if kind == "relu":
        return (np.asarray(pre) > 0.0).astype(np.float64)
    if kind == "linear":
        return np.ones_like(np.asarray(out, dtype=np.float64))
    raise DomainError(f"unknown activation {kind!r}")


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be two-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite values")
    return a


def _as_vector(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite values")
    return a


@dataclass
class SimpleRnnParams:
    """Weights of one simple recurrent layer.

    ``w_x`` maps inputs to units (units x features), ``w_h`` maps previous
    hidden state to units (units x units), ``b`` is the bias per unit.
    """

    w_x: np.ndarray
    w_h: np.ndarray
    b: np.ndarray
    activation: str = "tanh"

    def __post_init__(self) -> None:
        self.w_x = _as_matrix(self.w_x, "w_x")
        self.w_h = _as_matrix(self.w_h, "w_h")
        self.b = _as_vector(self.b, "b")
        u = self.w_x.shape[0]
        if self.w_h.shape != (u, u) or self.b.shape != (u,):
            raise ShapeError(
                f"inconsistent shapes: w_x {self.w_x.shape}, w_h {self.w_h.shape}, b {self.b.shape}"
            )
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")

    @property
    def units(self) -> int:
        return self.w_x.shape[0]

    @property
    def features(self) -> int:
        return self.w_x.shape[1]

    def copy(self) -> "SimpleRnnParams":
        return SimpleRnnParams(self.w_x.copy(), self.w_h.copy(), self.b.copy(), self.activation)


@dataclass
class LstmParams:
    """Weights of one LSTM layer, one entry per gate in order (f, i, g, o).

    The forget, input, and output gates always use sigmoid activation; only
    the candidate and the cell-output activation are configurable (tanh for
    the standard cell, linear for the provable constructions).
    """

    w_x: dict
    w_h: dict
    b: dict
    candidate_activation: str = "tanh"
    cell_output_activation: str = "tanh"

    def __post_init__(self) -> None:
        for store, kind in ((self.w_x, "w_x"), (self.w_h, "w_h"), (self.b, "b")):
            if set(store) != set(GATE_ORDER):
                raise ShapeError(f"{kind} must have exactly the gates {GATE_ORDER}")
        self.w_x = {g: _as_matrix(self.w_x[g], f"w_x[{g}]") for g in GATE_ORDER}
        self.w_h = {g: _as_matrix(self.w_h[g], f"w_h[{g}]") for g in GATE_ORDER}
        self.b = {g: _as_vector(self.b[g], f"b[{g}]") for g in GATE_ORDER}
        u, f = self.w_x["f"].shape
        for g in GATE_ORDER:
            if self.w_x[g].shape != (u, f) or self.w_h[g].shape != (u, u) or self.b[g].shape != (u,):
                raise ShapeError(f"gate {g!r} has inconsistent shapes")
        for kind in (self.candidate_activation, self.cell_output_activation):
            if kind not in ("tanh", "linear"):
                raise DomainError(
                    f"candidate/cell-output activation must be tanh or linear, got {kind!r}"
                )

    @property
    def units(self) -> int:
        return self.w_x["f"].shape[0]

    @property
    def features(self) -> int:
        return self.w_x["f"].shape[1]

    def copy(self) -> "LstmParams":
        return LstmParams(
            {g: self.w_x[g].copy() for g in GATE_ORDER},
            {g: self.w_h[g].copy() for g in GATE_ORDER},
            {g: self.b[g].copy() for g in GATE_ORDER},
            self.candidate_activation,
            self.cell_output_activation,
        )


@dataclass
class DenseParams:
    """One fully connected layer: ``act(w @ input + b)``."""

    w: np.ndarray
    b: np.ndarray
    activation: str = "relu"

    def __post_init__(self) -> None:
        self.w = _as_matrix(self.w, "w")
        self.b = _as_vector(self.b, "b")
        if self.b.shape != (self.w.shape[0],):
            raise ShapeError(f"bias shape {self.b.shape} does not match weight {self.w.shape}")
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")

    @property
    def units(self) -> int:
        return self.w.shape[0]

    def copy(self) -> "DenseParams":
        return DenseParams(self.w.copy(), self.b.copy(), self.activation)


@dataclass
class RecurrentState:
    """Hidden state ``h`` and, for LSTM layers, the cell state ``c``."""

    h: np.ndarray
    c: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.h = _as_vector(np.atleast_1d(np.asarray(self.h, dtype=np.float64)), "h")
        if self.c is not None:
            self.c = _as_vector(np.atleast_1d(np.asarray(self.c, dtype=np.float64)), "c")
            if self.c.shape != self.h.shape:
                raise ShapeError(f"h shape {self.h.shape} != c shape {self.c.shape}")

    def copy(self) -> "RecurrentState":
        return RecurrentState(self.h.copy(), None if self.c is None else self.c.copy())


@dataclass
class Network:
    """One recurrent layer followed by a dense stack.

    The final dense layer, when present, must have width 1 and linear
    activation (scalar regression output).  ``initial_state`` is the default
    recurrent state used by :func:`network_forward` when none is supplied;
    it defaults to zeros.
    """

    recurrent: SimpleRnnParams | LstmParams
    dense: list[DenseParams] = field(default_factory=list)
    recurrent_trainable: bool = True
    dense_trainable: list[bool] | None = None
    initial_state: RecurrentState | None = None

    def __post_init__(self) -> None:
        if self.dense_trainable is None:
            self.dense_trainable = [True] * len(self.dense)
        if len(self.dense_trainable) != len(self.dense):
            raise ShapeError("one trainable flag required per dense layer")
        width = self.recurrent.units
        for layer in self.dense:
            if layer.w.shape[1] != width:
                raise ShapeError(
                    f"dense layer expects input width {layer.w.shape[1]}, previous width is {width}"
                )
            width = layer.units
        if self.dense:
            last = self.dense[-1]
            if last.units != 1 or last.activation != "linear":
                raise ShapeError("final dense layer must have width 1 and linear activation")
        if self.initial_state is not None:
            self._check_state(self.initial_state)

    def _check_state(self, state: RecurrentState) -> None:
        u = self.recurrent.units
        if state.h.shape != (u,):
            raise ShapeError(f"initial hidden state must have shape ({u},)")
        if isinstance(self.recurrent, LstmParams):
            if state.c is None or state.c.shape != (u,):
                raise ShapeError(f"LSTM initial state needs a cell vector of shape ({u},)")

    @property
    def features(self) -> int:
        return self.recurrent.features

    def zero_state(self) -> RecurrentState:
        u = self.recurrent.units
        c = np.zeros(u) if isinstance(self.recurrent, LstmParams) else None
        return RecurrentState(np.zeros(u), c)

    def copy(self) -> "Network":
        return Network(
            self.recurrent.copy(),
            [d.copy() for d in self.dense],
            self.recurrent_trainable,
            list(self.dense_trainable),
            None if self.initial_state is None else self.initial_state.copy(),
        )


@dataclass(frozen=True)
class Architecture:
    """Shape of a network to be initialized: recurrent cell plus dense stack.

    Dense activations default to relu on hidden layers and linear on the
    final layer.  ``forget_bias`` seeds the LSTM forget gate so a freshly
    initialized cell starts with high retention.
    """

    features: int
    cell: str = "lstm"
    units: int = 64
    dense_units: tuple = (32, 16, 1)
    dense_activations: tuple | None = None
    candidate_activation: str = "tanh"
    cell_output_activation: str = "tanh"
    rnn_activation: str = "tanh"
    forget_bias: float = 1.0

    def dense_activation_kinds(self) -> tuple:
        if self.dense_activations is not None:
            if len(self.dense_activations) != len(self.dense_units):
                raise ShapeError("need one activation per dense layer")
            return tuple(self.dense_activations)
        if not self.dense_units:
            return ()
        return ("relu",) * (len(self.dense_units) - 1) + ("linear",)


def simple_rnn_step(params: SimpleRnnParams, h_prev: np.ndarray, x: np.ndarray) -> np.ndarray:
    """One recurrent update: ``act(w_x x + w_h h_prev + b)``."""
    h_prev = np.atleast_1d(np.asarray(h_prev, dtype=np.float64))
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (params.features,) or h_prev.shape != (params.units,):
        raise ShapeError(
            f"expected input ({params.features},) and state ({params.units},), "
            f"got {x.shape} and {h_prev.shape}"
        )
    return activation(params.activation, params.w_x @ x + params.w_h @ h_prev + params.b)


def lstm_step(params: LstmParams, state: RecurrentState, x: np.ndarray) -> RecurrentState:
    """One LSTM update of the recurrent state ``[c, h]``.

    Gates combine the input and previous hidden state; the cell state mixes
    retention and admission elementwise: ``c' = f*c + i*g``, ``h' = o*act(c')``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (params.features,):
        raise ShapeError(f"expected input of shape ({params.features},), got {x.shape}")
    if state.c is None:
        raise ShapeError("LSTM step requires a cell state")
    if state.h.shape != (params.units,):
        raise ShapeError(f"expected state of width {params.units}, got {state.h.shape}")
    pre = {g: params.w_x[g] @ x + params.w_h[g] @ state.h + params.b[g] for g in GATE_ORDER}
    f = expit(pre["f"])
    i = expit(pre["i"])
    g = activation(params.candidate_activation, pre["g"])
    o = expit(pre["o"])
    c = f * state.c + i * g
    h = o * activation(params.cell_output_activation, c)
    return RecurrentState(h, c)


def simple_rnn_forward(params: SimpleRnnParams, xs: np.ndarray, h0=None) -> np.ndarray:
    """Hidden-state trajectory over a sequence, initial state at index 0.

    ``xs`` has shape (steps, features); the result has shape
    (steps + 1, units).
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64)) if np.size(xs) else np.empty((0, params.features))
    h = np.zeros(params.units) if h0 is None else np.atleast_1d(np.asarray(h0, dtype=np.float64))
    out = np.empty((xs.shape[0] + 1, params.units))
    out[0] = h
    for t in range(xs.shape[0]):
        h = simple_rnn_step(params, h, xs[t])
        out[t + 1] = h
    return out


def lstm_forward(params: LstmParams, xs: np.ndarray, state0: RecurrentState | None = None):
    """Hidden- and cell-state trajectories over a sequence.

    Returns ``(hs, cs)``, each of shape (steps + 1, units) with the initial
    state at index 0.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64)) if np.size(xs) else np.empty((0, params.features))
    if state0 is None:
        state0 = RecurrentState(np.zeros(params.units), np.zeros(params.units))
    state = state0.copy()
    hs = np.empty((xs.shape[0] + 1, params.units))
    cs = np.empty_like(hs)
    hs[0], cs[0] = state.h, state.c
    for t in range(xs.shape[0]):
        state = lstm_step(params, state, xs[t])
        hs[t + 1], cs[t + 1] = state.h, state.c
    return hs, cs


def dense_stack_forward(layers: list[DenseParams], h: np.ndarray) -> np.ndarray:
    """Apply the dense stack to hidden states; broadcasts over leading axes."""
    out = h
    for layer in layers:
        out = activation(layer.activation, out @ layer.w.T + layer.b)
    return out


def network_forward(net: Network, xs, init: RecurrentState | None = None) -> np.ndarray:
    """Sequence-to-sequence pass: one output per time step.

    The recurrent state threads through all steps; only the hidden state
    feeds the dense stack.  With a width-1 head the result has shape
    (steps,), otherwise (steps, width).  An empty input yields an empty
    output.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        width = net.dense[-1].units if net.dense else net.recurrent.units
        return np.empty((0,)) if width == 1 else np.empty((0, width))
    if xs.ndim == 1:
        xs = xs[:, None]
    if xs.shape[1] != net.features:
        raise ShapeError(f"expected {net.features} features, got {xs.shape[1]}")
    if init is None:
        init = net.initial_state if net.initial_state is not None else net.zero_state()
    net._check_state(init)
    if isinstance(net.recurrent, LstmParams):
        hs, _ = lstm_forward(net.recurrent, xs, init)
    else:
        hs = simple_rnn_forward(net.recurrent, xs, init.h)
    out = dense_stack_forward(net.dense, hs[1:])
    return out[:, 0] if out.ndim == 2 and out.shape[1] == 1 else out


def iter_parameters(net: Network, trainable_only: bool = False):
    """Yield ``(name, array)`` for every parameter tensor, in fixed order.

    Names are dotted paths (``recurrent.w_x.f``, ``dense.0.w``); the arrays
    are the live tensors, so in-place mutation updates the network.
    """
    rec = net.recurrent
    if not trainable_only or net.recurrent_trainable:
        if isinstance(rec, LstmParams):
            for g in GATE_ORDER:
                yield f"recurrent.w_x.{g}", rec.w_x[g]
                yield f"recurrent.w_h.{g}", rec.w_h[g]
                yield f"recurrent.b.{g}", rec.b[g]
        else:
            yield "recurrent.w_x", rec.w_x
            yield "recurrent.w_h", rec.w_h
            yield "recurrent.b", rec.b
    for idx, layer in enumerate(net.dense):
        if trainable_only and not net.dense_trainable[idx]:
            continue
        yield f"dense.{idx}.w", layer.w
        yield f"dense.{idx}.b", layer.b


def param_count(net: Network) -> int:
    """Total number of parameters; an LSTM layer counts 4*(f*u + u*u + u)."""
    return sum(arr.size for _, arr in iter_parameters(net))
