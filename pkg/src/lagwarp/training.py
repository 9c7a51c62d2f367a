"""Sample construction, masked loss, BPTT gradients, and the training loop.

Targets are sparse: a series carries an observation mask, and losses are
averaged over observed positions only.  Gradients are computed by reverse
accumulation through the unrolled recurrence, truncated at the sample
window.  Training is plain mini-batch gradient descent (optionally Adam)
with early stopping on a validation series and best-weights restoration,
and is bit-reproducible for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyDataError, ShapeError
from .rnn import (
    GATE_ORDER,
    Architecture,
    DenseParams,
    LstmParams,
    Network,
    SimpleRnnParams,
    activation,
    activation_deriv,
    iter_parameters,
)
from scipy.special import expit

__all__ = [
    "SparseSeries",
    "Sample",
    "FreezeSpec",
    "TrainingConfig",
    "make_windows",
    "masked_mse",
    "bptt_gradients",
    "train",
    "init_network",
]


@dataclass
class SparseSeries:
    """Hourly features with sparsely observed targets.

    ``t`` is the integer epoch-hour per row and must increase by exactly 1
    (gaps must be imputed upstream).  ``target`` holds NaN wherever ``mask``
    is false.
    """

    t: np.ndarray
    features: np.ndarray
    target: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=np.int64)
        self.features = np.asarray(self.features, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        n = self.t.shape[0]
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise ShapeError(f"features must have shape ({n}, n_features)")
        if self.target.shape != (n,) or self.mask.shape != (n,):
            raise ShapeError("target and mask must be one value per row")
        if n > 1 and not np.all(np.diff(self.t) == 1):
            raise DomainError("hour index must increase by exactly 1 per row")
        if not np.all(np.isfinite(self.features)):
            raise DomainError("features contain non-finite values")
        if not np.all(np.isfinite(self.target[self.mask])):
            raise DomainError("observed targets must be finite")

    @classmethod
    def from_target(cls, t, features, target) -> "SparseSeries":
        """Derive the mask from NaN positions in ``target``."""
        target = np.asarray(target, dtype=np.float64)
        return cls(t, features, target, np.isfinite(target))

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())


@dataclass
class Sample:
    """One rolling-window training sample: inputs plus masked targets."""

    inputs: np.ndarray
    targets: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        self.mask = np.asarray(self.mask, dtype=bool)
        w = self.inputs.shape[0]
        if self.inputs.ndim != 2:
            raise ShapeError("sample inputs must be (window, features)")
        if self.targets.shape != (w,) or self.mask.shape != (w,):
            raise ShapeError("targets and mask must have one entry per window step")

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class FreezeSpec:
    """Which layer groups may update during training."""

    recurrent_trainable: bool = True
    dense_trainable: bool = True


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters of the gradient-descent loop.

    ``clip_norm`` rescales each batch gradient to the given global norm when
    exceeded (None disables).  ``freeze`` overrides the network's trainable
    flags when given; None leaves them as-is.
    """

    window: int = 48
    stride: int = 12
    batch_size: int = 32
    epochs: int = 100
    patience: int = 5
    learning_rate: float = 0.01
    seed: int = 0
    freeze: FreezeSpec | None = None
    clip_norm: float | None = 1.0
    optimizer: str = "sgd"
    keep_empty_windows: bool = False

    def __post_init__(self) -> None:
        if self.window < 1 or self.stride < 1:
            raise DomainError("window and stride must be at least 1")
        if self.patience < 1:
            raise DomainError("patience must be at least 1")
        if self.epochs < 0 or self.batch_size < 1:
            raise DomainError("epochs must be >= 0 and batch_size >= 1")
        if not self.learning_rate > 0:
            raise DomainError("learning rate must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise DomainError(f"unknown optimizer {self.optimizer!r}")


def make_windows(
    series: SparseSeries, window: int, stride: int, keep_empty: bool = False
) -> list[Sample]:
    """Rolling-window samples at offsets 0, stride, 2*stride, ...

    Yields ``floor((N - window)/stride) + 1`` windows; those containing no
    observed target are dropped unless ``keep_empty`` (they contribute no
    loss).
    """
    if window < 1 or stride < 1:
        raise DomainError("window and stride must be at least 1")
    n = len(series)
    if n < window:
        raise EmptyDataError(f"series of length {n} is shorter than the window {window}")
    samples = []
    for start in range(0, n - window + 1, stride):
        stop = start + window
        sample = Sample(
            series.features[start:stop], series.target[start:stop], series.mask[start:stop]
        )
        if keep_empty or sample.n_observed > 0:
            samples.append(sample)
    return samples


def masked_mse(pred: np.ndarray, targets: np.ndarray, mask: np.ndarray) -> float:
    """Mean squared error over observed positions only."""
    pred = np.asarray(pred, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != targets.shape or pred.shape != mask.shape:
        raise ShapeError("prediction, target, and mask lengths must match")
    if not mask.any():
        raise EmptyDataError("loss is undefined with zero observed targets")
    diff = pred[mask] - targets[mask]
    return float(np.mean(diff * diff))


# ---------------------------------------------------------------------------
# Forward pass with cached intermediates, and its reverse sweep.


def _forward_cached(net: Network, xs: np.ndarray):
    rec = net.recurrent
    steps = xs.shape[0]
    init = net.initial_state if net.initial_state is not None else net.zero_state()
    cache: dict = {"xs": xs}
    if isinstance(rec, LstmParams):
        hs = np.empty((steps + 1, rec.units))
        cs = np.empty_like(hs)
        hs[0], cs[0] = init.h, init.c
        gates = {g: np.empty((steps, rec.units)) for g in GATE_ORDER}
        cell_out = np.empty((steps, rec.units))
        for t in range(steps):
            pre = {
                g: rec.w_x[g] @ xs[t] + rec.w_h[g] @ hs[t] + rec.b[g] for g in GATE_ORDER
            }
            f = expit(pre["f"])
            i = expit(pre["i"])
            g = activation(rec.candidate_activation, pre["g"])
            o = expit(pre["o"])
            c = f * cs[t] + i * g
            a = activation(rec.cell_output_activation, c)
            gates["f"][t], gates["i"][t], gates["g"][t], gates["o"][t] = f, i, g, o
            cs[t + 1] = c
            cell_out[t] = a
            hs[t + 1] = o * a
        cache.update(hs=hs, cs=cs, gates=gates, cell_out=cell_out)
    else:
        hs = np.empty((steps + 1, rec.units))
        hs[0] = init.h
        pres = np.empty((steps, rec.units))
        for t in range(steps):
            pre = rec.w_x @ xs[t] + rec.w_h @ hs[t] + rec.b
            pres[t] = pre
            hs[t + 1] = activation(rec.activation, pre)
        cache.update(hs=hs, pres=pres)

    dense_in = [hs[1:]]
    dense_pre = []
    for layer in net.dense:
        z = dense_in[-1] @ layer.w.T + layer.b
        dense_pre.append(z)
        dense_in.append(activation(layer.activation, z))
    cache.update(dense_in=dense_in, dense_pre=dense_pre)
    out = dense_in[-1]
    preds = out[:, 0] if out.ndim == 2 and out.shape[1] == 1 else out
    return preds, cache


def _backward(net: Network, cache: dict, dy: np.ndarray) -> dict:
    grads: dict[str, np.ndarray] = {}
    xs = cache["xs"]
    steps = xs.shape[0]

    # Dense stack, vectorized over time.
    d_out = dy[:, None]
    for idx in range(len(net.dense) - 1, -1, -1):
        layer = net.dense[idx]
        z = cache["dense_pre"][idx]
        out = cache["dense_in"][idx + 1]
        dz = d_out * activation_deriv(layer.activation, z, out)
        grads[f"dense.{idx}.w"] = dz.T @ cache["dense_in"][idx]
        grads[f"dense.{idx}.b"] = dz.sum(axis=0)
        d_out = dz @ layer.w
    d_hidden = d_out  # (steps, units)

    rec = net.recurrent
    if isinstance(rec, LstmParams):
        hs, cs, gates, cell_out = cache["hs"], cache["cs"], cache["gates"], cache["cell_out"]
        gw_x = {g: np.zeros_like(rec.w_x[g]) for g in GATE_ORDER}
        gw_h = {g: np.zeros_like(rec.w_h[g]) for g in GATE_ORDER}
        gb = {g: np.zeros_like(rec.b[g]) for g in GATE_ORDER}
        dh_next = np.zeros(rec.units)
        dc_next = np.zeros(rec.units)
        for t in range(steps - 1, -1, -1):
            f, i, g, o = (gates[k][t] for k in GATE_ORDER)
            dh = d_hidden[t] + dh_next
            d_pre_o = dh * cell_out[t] * o * (1.0 - o)
            if rec.cell_output_activation == "tanh":
                dc = dh * o * (1.0 - cell_out[t] ** 2) + dc_next
            else:
                dc = dh * o + dc_next
            d_pre_f = dc * cs[t] * f * (1.0 - f)
            d_pre_i = dc * g * i * (1.0 - i)
            if rec.candidate_activation == "tanh":
                d_pre_g = dc * i * (1.0 - g**2)
            else:
                d_pre_g = dc * i
            dh_next = np.zeros(rec.units)
            for name, d_pre in (("f", d_pre_f), ("i", d_pre_i), ("g", d_pre_g), ("o", d_pre_o)):
                gw_x[name] += np.outer(d_pre, xs[t])
                gw_h[name] += np.outer(d_pre, hs[t])
                gb[name] += d_pre
                dh_next += rec.w_h[name].T @ d_pre
            dc_next = dc * f
        for g in GATE_ORDER:
            grads[f"recurrent.w_x.{g}"] = gw_x[g]
            grads[f"recurrent.w_h.{g}"] = gw_h[g]
            grads[f"recurrent.b.{g}"] = gb[g]
    else:
        hs, pres = cache["hs"], cache["pres"]
        gw_x = np.zeros_like(rec.w_x)
        gw_h = np.zeros_like(rec.w_h)
        gb = np.zeros_like(rec.b)
        dh_next = np.zeros(rec.units)
        for t in range(steps - 1, -1, -1):
            dh = d_hidden[t] + dh_next
            d_pre = dh * activation_deriv(rec.activation, pres[t], hs[t + 1])
            gw_x += np.outer(d_pre, xs[t])
            gw_h += np.outer(d_pre, hs[t])
            gb += d_pre
            dh_next = rec.w_h.T @ d_pre
        grads["recurrent.w_x"] = gw_x
        grads["recurrent.w_h"] = gw_h
        grads["recurrent.b"] = gb
    return grads


def sample_loss_and_gradients(net: Network, sample: Sample) -> tuple[float, dict]:
    """Masked MSE on one sample and its gradient for every trainable tensor."""
    if sample.n_observed == 0:
        raise EmptyDataError("sample has no observed targets")
    if sample.inputs.shape[1] != net.features:
        raise ShapeError(
            f"sample has {sample.inputs.shape[1]} features, network expects {net.features}"
        )
    preds, cache = _forward_cached(net, sample.inputs)
    if preds.ndim != 1:
        raise ShapeError("training requires a scalar output per step")
    n_obs = sample.n_observed
    loss = masked_mse(preds, sample.targets, sample.mask)
    dy = np.zeros(len(preds))
    dy[sample.mask] = 2.0 * (preds[sample.mask] - sample.targets[sample.mask]) / n_obs
    grads = _backward(net, cache, dy)
    trainable = dict(iter_parameters(net, trainable_only=True))
    return loss, {name: grads[name] for name in trainable}


def bptt_gradients(net: Network, sample: Sample) -> dict:
    """Gradient of the sample's masked MSE for every trainable parameter.

    Reverse accumulation through the unrolled recurrence; the truncation
    horizon is the window length.  Frozen layers are omitted.
    """
    return sample_loss_and_gradients(net, sample)[1]


def _clip_global_norm(grads: dict, clip: float) -> dict:
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > clip and total > 0.0:
        scale = clip / total
        return {k: g * scale for k, g in grads.items()}
    return grads


def _validation_loss(net: Network, val: SparseSeries) -> float:
    from .rnn import network_forward

    preds = network_forward(net, val.features)
    return masked_mse(preds, val.target, val.mask)


def train(
    net: Network,
    train_samples: list[Sample],
    val: SparseSeries,
    cfg: TrainingConfig,
) -> tuple[Network, list[dict]]:
    """Mini-batch gradient descent with early stopping on ``val``.

    Returns a trained copy of the network (the input is untouched) and a
    history of per-epoch losses.  Epoch 0 records the pre-training
    validation loss; the returned parameters are those of the epoch with the
    lowest validation loss, so training never ends worse than it started on
    the monitored loss.  Identical seeds and data reproduce bit-identical
    parameters.
    """
    net = net.copy()
    if cfg.freeze is not None:
        if not (cfg.freeze.recurrent_trainable or cfg.freeze.dense_trainable):
            raise DomainError("at least one layer group must remain trainable")
        net.recurrent_trainable = cfg.freeze.recurrent_trainable
        net.dense_trainable = [cfg.freeze.dense_trainable] * len(net.dense)
    usable = [s for s in train_samples if s.n_observed > 0]
    if not usable:
        raise EmptyDataError("no training sample has an observed target")
    if len(val) == 0 or val.n_observed == 0:
        raise EmptyDataError("validation series has no observed targets")
    history: list[dict] = []
    if cfg.epochs == 0:
        return net, history

    params = dict(iter_parameters(net, trainable_only=True))
    if not params:
        raise DomainError("no trainable parameters; relax the freeze specification")
    rng = np.random.default_rng(cfg.seed)
    adam_m = {k: np.zeros_like(v) for k, v in params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in params.items()}
    adam_t = 0

    best_val = _validation_loss(net, val)
    best_snapshot = {k: v.copy() for k, v in params.items()}
    best_epoch = 0
    history.append({"epoch": 0, "train_loss": float("nan"), "val_loss": best_val})

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(usable))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [usable[j] for j in order[start : start + cfg.batch_size]]
            batch_grads = {k: np.zeros_like(v) for k, v in params.items()}
            batch_loss = 0.0
            for sample in batch:
                loss, grads = sample_loss_and_gradients(net, sample)
                batch_loss += loss
                for k, g in grads.items():
                    batch_grads[k] += g
            inv = 1.0 / len(batch)
            batch_grads = {k: g * inv for k, g in batch_grads.items()}
            epoch_loss += batch_loss
            if cfg.clip_norm is not None:
                batch_grads = _clip_global_norm(batch_grads, cfg.clip_norm)
            if cfg.optimizer == "adam":
                adam_t += 1
                b1, b2, eps = 0.9, 0.999, 1e-8
                for k, g in batch_grads.items():
                    adam_m[k] = b1 * adam_m[k] + (1 - b1) * g
                    adam_v[k] = b2 * adam_v[k] + (1 - b2) * g * g
                    m_hat = adam_m[k] / (1 - b1**adam_t)
                    v_hat = adam_v[k] / (1 - b2**adam_t)
                    params[k] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
            else:
                for k, g in batch_grads.items():
                    params[k] -= cfg.learning_rate * g
        train_loss = epoch_loss / len(usable)
        val_loss = _validation_loss(net, val)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best_snapshot = {k: v.copy() for k, v in params.items()}
            best_epoch = epoch
        elif epoch - best_epoch >= cfg.patience:
            break
    for k, v in params.items():
        v[...] = best_snapshot[k]
    return net, history


def init_network(arch: Architecture, seed: int) -> Network:
    """Random network for the given architecture, deterministic per seed.

    Kernels and recurrent matrices are drawn uniform on
    +-sqrt(6 / (fan_in + fan_out)); biases start at zero except the LSTM
    forget bias, which starts at ``arch.forget_bias`` (default 1) so a fresh
    cell begins with high retention.
    """
    rng = np.random.default_rng(seed)

    def glorot(rows: int, cols: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-limit, limit, size=(rows, cols))

    u, f = arch.units, arch.features
    if arch.cell == "lstm":
        w_x = {g: glorot(u, f) for g in GATE_ORDER}
        w_h = {g: glorot(u, u) for g in GATE_ORDER}
        b = {g: np.zeros(u) for g in GATE_ORDER}
        b["f"] = np.full(u, float(arch.forget_bias))
        recurrent: SimpleRnnParams | LstmParams = LstmParams(
            w_x, w_h, b, arch.candidate_activation, arch.cell_output_activation
        )
    elif arch.cell == "simple":
        recurrent = SimpleRnnParams(glorot(u, f), glorot(u, u), np.zeros(u), arch.rnn_activation)
    else:
        raise DomainError(f"unknown cell kind {arch.cell!r}")

    acts = arch.dense_activation_kinds()
    dense = []
    width = u
    for units, act in zip(arch.dense_units, acts):
        dense.append(DenseParams(glorot(units, width), np.zeros(units), act))
        width = units
    return Network(recurrent, dense)
