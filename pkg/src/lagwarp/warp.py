"""Timescale transfer by uniform gate-bias shifts on a pretrained LSTM.

Adding a constant to every forget-gate bias and another to every input-gate
bias rescales the network's learned characteristic timescale while leaving
all other parameters untouched: exactly ``2 * units`` scalars change.  The
two shift values are fit by grid search on observed targets, either alone
(evaluate each cell's training RMSE on the shifted network) or combined
with fine-tuning (retrain each shifted network and select on validation
RMSE).

Grid cells are independent, so the search evaluates all cells in one
batched recurrent sweep; the result table is identical to evaluating cells
one at a time in any order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .diagnostics import Metrics
from .errors import DomainError, EmptyDataError, UnsupportedLayerError
from .rnn import GATE_ORDER, LstmParams, Network, activation, network_forward
from .training import SparseSeries, TrainingConfig, make_windows, masked_mse, train

__all__ = [
    "WarpShift",
    "WarpGrid",
    "GridSearchResult",
    "apply_bias_shift",
    "grid_search_timewarp",
    "timewarp_finetune",
    "expected_shift_signs",
]


@dataclass(frozen=True)
class WarpShift:
    """Additive shifts for the forget and input gate biases.

    One scalar per gate, applied uniformly to every unit and constant in
    time.
    """

    alpha_f: float
    alpha_i: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha_f) and math.isfinite(self.alpha_i)):
            raise DomainError("bias shifts must be finite")


@dataclass(frozen=True)
class WarpGrid:
    """Candidate shift values per gate; the search covers their product."""

    f_values: tuple
    i_values: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "f_values", tuple(float(v) for v in self.f_values))
        object.__setattr__(self, "i_values", tuple(float(v) for v in self.i_values))
        if not self.f_values or not self.i_values:
            raise DomainError("grid axes must be non-empty")

    @classmethod
    def evenly_spaced(cls, size: int = 25, low: float = -5.0, high: float = 5.0) -> "WarpGrid":
        """Square grid of ``size`` evenly spaced values per axis (default 25 on [-5, 5])."""
        values = tuple(np.linspace(low, high, size))
        return cls(values, values)

    @property
    def n_cells(self) -> int:
        return len(self.f_values) * len(self.i_values)

    def cells(self) -> list[WarpShift]:
        return [WarpShift(f, i) for f in self.f_values for i in self.i_values]


@dataclass
class GridSearchResult:
    """Outcome of a shift search: the winning cell and the full table.

    ``metric`` names what the table's RMSE column was computed on
    ("train_rmse" for the search without fine-tuning, "val_rmse" with it).
    """

    best_shift: WarpShift
    best_rmse: float
    table: list
    metric: str = "train_rmse"
    test_metrics: Metrics | None = None


def apply_bias_shift(net: Network, shift: WarpShift) -> Network:
    """Shifted copy of the network: ``b_f += alpha_f``, ``b_i += alpha_i``.

    Every other parameter is bit-identical to the input, which is left
    untouched.  Only LSTM recurrent layers have the gates this acts on.
    """
    if not isinstance(net.recurrent, LstmParams):
        raise UnsupportedLayerError("bias shifts are defined for LSTM recurrent layers only")
    out = net.copy()
    out.recurrent.b["f"] = out.recurrent.b["f"] + shift.alpha_f
    out.recurrent.b["i"] = out.recurrent.b["i"] + shift.alpha_i
    return out


def expected_shift_signs(gamma: float) -> tuple[int, int]:
    """Theoretical signs of (alpha_f, alpha_i) for a warp factor ``gamma``.

    ``gamma > 1`` lowers retention (faster equilibration), so the forget
    bias shifts down and the input bias up: ``(-1, +1)``.  ``gamma < 1``
    gives the opposite.  At ``gamma == 1`` there is no shift and the signs
    are undefined.
    """
    if not gamma > 0:
        raise DomainError(f"warp factor must be positive, got {gamma}")
    if gamma == 1.0:
        raise DomainError("warp factor 1 leaves biases unchanged; signs are undefined")
    return (-1, 1) if gamma > 1.0 else (1, -1)


def _rmse_all_cells(net: Network, series: SparseSeries, shifts: list[WarpShift]) -> np.ndarray:
    """Training RMSE of every shifted variant, evaluated in one batched sweep.

    State arrays carry one row per grid cell; all cells share the weights
    and differ only in the forget/input biases, so each row reproduces that
    cell's independent forward pass.
    """
    lstm = net.recurrent
    xs = series.features
    n_cells = len(shifts)
    alpha_f = np.array([s.alpha_f for s in shifts])
    alpha_i = np.array([s.alpha_i for s in shifts])
    bias = {g: lstm.b[g][None, :] for g in GATE_ORDER}
    bias_f = lstm.b["f"][None, :] + alpha_f[:, None]
    bias_i = lstm.b["i"][None, :] + alpha_i[:, None]

    init = net.initial_state if net.initial_state is not None else net.zero_state()
    h = np.tile(init.h, (n_cells, 1))
    c = np.tile(init.c, (n_cells, 1))
    sq_err = np.zeros(n_cells)
    n_obs = 0
    for t in range(xs.shape[0]):
        from_x = {g: lstm.w_x[g] @ xs[t] for g in GATE_ORDER}
        f = expit(from_x["f"] + h @ lstm.w_h["f"].T + bias_f)
        i = expit(from_x["i"] + h @ lstm.w_h["i"].T + bias_i)
        g = activation(lstm.candidate_activation, from_x["g"] + h @ lstm.w_h["g"].T + bias["g"])
        o = expit(from_x["o"] + h @ lstm.w_h["o"].T + bias["o"])
        c = f * c + i * g
        h = o * activation(lstm.cell_output_activation, c)
        if series.mask[t]:
            out = h
            for layer in net.dense:
                out = activation(layer.activation, out @ layer.w.T + layer.b)
            resid = out[:, 0] - series.target[t]
            sq_err += resid * resid
            n_obs += 1
    return np.sqrt(sq_err / n_obs)


def _argmin_with_tiebreak(shifts: list[WarpShift], rmses) -> int:
    """Index of the lowest RMSE; exact ties prefer the smallest intervention.

    Tie order: smaller |alpha_f| + |alpha_i|, then smaller alpha_f, then
    smaller alpha_i.  This makes the selection unique and independent of
    grid enumeration order.
    """
    return min(
        range(len(shifts)),
        key=lambda k: (
            rmses[k],
            abs(shifts[k].alpha_f) + abs(shifts[k].alpha_i),
            shifts[k].alpha_f,
            shifts[k].alpha_i,
        ),
    )


def grid_search_timewarp(net: Network, train_series: SparseSeries, grid: WarpGrid) -> GridSearchResult:
    """Fit the two shift parameters by exhaustive search, no fine-tuning.

    Every (alpha_f, alpha_i) pair is applied to the pretrained network, the
    full training series is run forward, and the RMSE at observed target
    times is recorded; the cell with the lowest training RMSE wins (ties
    broken deterministically toward the smallest shift).
    """
    if not isinstance(net.recurrent, LstmParams):
        raise UnsupportedLayerError("bias shifts are defined for LSTM recurrent layers only")
    if train_series.n_observed == 0:
        raise EmptyDataError("grid search needs at least one observed target")
    shifts = grid.cells()
    rmses = _rmse_all_cells(net, train_series, shifts)
    best = _argmin_with_tiebreak(shifts, rmses)
    table = list(zip(shifts, (float(r) for r in rmses)))
    return GridSearchResult(shifts[best], float(rmses[best]), table, metric="train_rmse")


def _finetune_cell(args) -> float:
    net, shift, samples, val, cfg = args
    tuned, _ = train(apply_bias_shift(net, shift), samples, val, cfg)
    return math.sqrt(masked_mse(network_forward(tuned, val.features), val.target, val.mask))


def timewarp_finetune(
    net: Network,
    train_series: SparseSeries,
    val: SparseSeries,
    grid: WarpGrid,
    cfg: TrainingConfig,
    n_jobs: int = 1,
) -> tuple[Network, GridSearchResult]:
    """Shift-then-fine-tune search: select on validation RMSE.

    Each grid cell shifts the pretrained biases, fine-tunes all trainable
    parameters on the training windows with early stopping monitored on
    ``val``, and records the tuned model's validation RMSE.  The winning
    cell's fine-tuned network is returned together with the table.  Cells
    are independent; ``n_jobs`` > 1 evaluates them in parallel processes
    with an identical result.
    """
    if train_series.n_observed == 0:
        raise EmptyDataError("fine-tuning needs at least one observed training target")
    if len(val) == 0 or val.n_observed == 0:
        raise EmptyDataError("fine-tuning requires a validation set with observed targets")
    samples = make_windows(train_series, cfg.window, cfg.stride, cfg.keep_empty_windows)
    shifts = grid.cells()
    jobs = [(net, shift, samples, val, cfg) for shift in shifts]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rmses = list(pool.map(_finetune_cell, jobs))
    else:
        rmses = [_finetune_cell(job) for job in jobs]
    best = _argmin_with_tiebreak(shifts, rmses)
    # Training is deterministic per seed, so re-running the winning cell
    # reproduces its network exactly without holding every candidate alive.
    tuned, _ = train(apply_bias_shift(net, shifts[best]), samples, val, cfg)
    table = list(zip(shifts, (float(r) for r in rmses)))
    result = GridSearchResult(shifts[best], float(rmses[best]), table, metric="val_rmse")
    return tuned, result
