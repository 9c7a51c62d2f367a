"""Command-line interface: reproduction commands, training, and diagnostics.

Every command is deterministic given its configuration and seed, writes its
outputs under ``--out``, and records a ``manifest.json`` with the resolved
configuration.  Exit codes: 0 success, 2 parse error, 3 domain error,
4 empty data, 5 weights/shape error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constructions import (
    build_exact_simplernn,
    build_linear_lstm,
    build_tanh_simplernn,
    default_output_gate_bias,
    lstm_error_bound,
    warp_lstm_theoretical,
    warp_simplernn,
)
from .diagnostics import acf, interpolate_predictions, metrics, pacf
from .dynsys import NewtonCooling, newton_solution, zoh_discretize
from .errors import (
    DomainError,
    EmptyDataError,
    ParseError,
    ShapeError,
    UnsupportedLayerError,
    WeightsFormatError,
)
from .fmc import FmcOdeHyper, FuelClass, fmc_forecast
from .rnn import (
    Architecture,
    DenseParams,
    LstmParams,
    Network,
    RecurrentState,
    lstm_forward,
    network_forward,
    param_count,
    simple_rnn_forward,
)
from .serialization import (
    load_weights,
    read_csv_columns,
    read_sparse_series,
    read_weather_csv,
    save_weights,
    write_csv,
    write_json,
)
from .training import FreezeSpec, TrainingConfig, init_network, make_windows, train
from .warp import WarpGrid, WarpShift, apply_bias_shift, grid_search_timewarp, timewarp_finetune

HANDLED_ERRORS = (
    ParseError,
    DomainError,
    EmptyDataError,
    WeightsFormatError,
    ShapeError,
    UnsupportedLayerError,
)

RNN_DEMO_TOLERANCE = 1e-10


def _exit_code(err: Exception) -> int:
    if isinstance(err, ParseError):
        return 2
    if isinstance(err, EmptyDataError):
        return 4
    if isinstance(err, DomainError):
        return 3
    return 5


def _identity_head(units: int = 1) -> DenseParams:
    return DenseParams(np.eye(units)[:1], np.zeros(1), "linear")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(args, out: Path) -> None:
    skip = {"func", "config"}
    config = {
        k: (list(v) if isinstance(v, tuple) else v)
        for k, v in sorted(vars(args).items())
        if k not in skip
    }
    write_json(out / "manifest.json", {
        "command": args.command,
        "seed": args.seed,
        "artifact_version": __version__,
        "config": config,
    })


def _load_series(path: str, features: str, target: str):
    names = [c.strip() for c in features.split(",") if c.strip()]
    if not names:
        raise ParseError("at least one feature column is required")
    return read_sparse_series(path, names, target)


def _training_config(args, seed: int | None = None) -> TrainingConfig:
    freeze = None
    if getattr(args, "freeze", "none") != "none":
        freeze = FreezeSpec(
            recurrent_trainable=args.freeze != "recurrent",
            dense_trainable=args.freeze != "dense",
        )
    return TrainingConfig(
        window=args.window,
        stride=args.stride,
        batch_size=args.batch_size,
        epochs=args.epochs,
        patience=args.patience,
        learning_rate=args.learning_rate,
        seed=args.seed if seed is None else seed,
        freeze=freeze,
        clip_norm=None if args.clip_norm == 0 else args.clip_norm,
        optimizer=args.optimizer,
    )


def _plot_lines(path: Path, x, series: dict, title: str, xlabel: str, ylabel: str) -> None:
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on extras
        raise DomainError("plot output requires matplotlib (install lagwarp[plot])") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for label, values in series.items():
        ax.plot(x, values, label=label)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.4)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


# ---------------------------------------------------------------------------
# Commands


def cmd_newton_demo(args) -> dict:
    """Cooling-curve reproduction: exact RNN and warped LSTM against truth."""
    out = _out_dir(args)
    ks = np.linspace(args.k_min, args.k_max, args.k_count)
    base_k = float(ks[-1])
    steps = args.steps
    t0, ta = args.t0, args.ta
    bo = args.output_gate_bias
    if bo is None:
        bo = default_output_gate_bias(args.epsilon, args.bound)
    bound = lstm_error_bound(bo, args.bound)

    rnn_base, h0 = build_exact_simplernn(zoh_discretize(base_k, 1.0), t0)
    lstm_base, state0 = build_linear_lstm(
        zoh_discretize(base_k, 1.0), t0, args.epsilon, args.bound, output_gate_bias=bo
    )
    ambient = np.full((steps, 1), ta)

    rows = []
    rnn_errors, lstm_errors = [], []
    for k in ks:
        gamma = float(k) / base_k
        truth = np.array([newton_solution(NewtonCooling(t0, ta, float(k)), t) for t in range(steps + 1)])
        rnn_k = rnn_base if gamma == 1.0 else warp_simplernn(rnn_base, gamma)
        rnn_traj = simple_rnn_forward(rnn_k, ambient, h0)[:, 0]
        lstm_k = lstm_base if gamma == 1.0 else warp_lstm_theoretical(lstm_base, gamma)
        lstm_traj = lstm_forward(lstm_k, ambient, state0)[0][:, 0]
        rnn_errors.append(float(np.max(np.abs(truth[1:] - rnn_traj[1:]))))
        lstm_errors.append(float(np.max(np.abs(truth[1:] - lstm_traj[1:]))))
        for t in range(steps + 1):
            rows.append((float(k), t, truth[t], rnn_traj[t], lstm_traj[t]))
    write_csv(out / "newton_trajectories.csv", ["k", "t", "true", "simple_rnn", "lstm"], rows)

    report = {
        "k_values": [float(k) for k in ks],
        "base_k": base_k,
        "steps": steps,
        "epsilon": args.epsilon,
        "bound_M": args.bound,
        "output_gate_bias": bo,
        "analytic_lstm_bound": bound,
        "rnn_tolerance": RNN_DEMO_TOLERANCE,
        "simple_rnn_max_errors": rnn_errors,
        "lstm_max_errors": lstm_errors,
        "simple_rnn_overall_max_error": max(rnn_errors),
        "lstm_overall_max_error": max(lstm_errors),
    }
    report["passed"] = bool(
        report["simple_rnn_overall_max_error"] <= RNN_DEMO_TOLERANCE
        and report["lstm_overall_max_error"] <= min(args.epsilon, bound)
    )
    write_json(out / "newton_report.json", report)
    if args.plot:
        truth_by_k = {
            f"k={k:.3g}": [r[2] for r in rows if r[0] == float(k)] for k in ks
        }
        _plot_lines(out / "newton_curves.svg", np.arange(steps + 1), truth_by_k,
                    "Cooling curves", "step", "temperature")
    print(f"simple RNN max error: {report['simple_rnn_overall_max_error']:.3e} "
          f"(tolerance {RNN_DEMO_TOLERANCE:.0e})")
    print(f"LSTM max error: {report['lstm_overall_max_error']:.6f} "
          f"(epsilon {args.epsilon}, analytic bound {bound:.6f})")
    print("PASS" if report["passed"] else "FAIL")
    return report


def cmd_construct(args) -> dict:
    """Build a provable cell for a given retention coefficient and save it."""
    out = _out_dir(args)
    report: dict = {"kind": args.kind, "a": args.a, "z0": args.z0}
    if args.kind == "simple":
        params, h0 = build_exact_simplernn(args.a, args.z0)
        net = Network(params, [_identity_head()], initial_state=RecurrentState(np.array([h0])))
    elif args.kind == "tanh":
        params, scaling = build_tanh_simplernn(args.a, args.z0, args.epsilon, args.bound, args.horizon)
        net = Network(
            params,
            [_identity_head()],
            initial_state=RecurrentState(np.array([scaling.scale(args.z0)])),
        )
        report.update(
            delta=scaling.delta,
            scale_factor=scaling.scale_factor,
            note="scale inputs by scale_factor before the network and divide outputs by it after",
        )
    elif args.kind == "lstm":
        bo = args.output_gate_bias
        if bo is None:
            bo = default_output_gate_bias(args.epsilon, args.bound)
        params, state = build_linear_lstm(args.a, args.z0, args.epsilon, args.bound, bo)
        net = Network(params, [_identity_head()], initial_state=state)
        report.update(
            output_gate_bias=bo,
            epsilon=args.epsilon,
            bound_M=args.bound,
            analytic_error_bound=lstm_error_bound(bo, args.bound),
        )
    else:  # pragma: no cover - argparse restricts choices
        raise DomainError(f"unknown construction kind {args.kind!r}")
    report["param_count"] = param_count(net)
    save_weights(net, out / "weights.json")
    write_json(out / "construct_report.json", report)
    print(f"wrote {args.kind} construction ({report['param_count']} parameters)")
    return report


def cmd_warp(args) -> dict:
    """Warp saved weights: theoretical rewrite by gamma, or a direct shift."""
    out = _out_dir(args)
    net = load_weights(args.weights)
    if args.gamma is not None and (args.alpha_f != 0.0 or args.alpha_i != 0.0):
        raise DomainError("give either --gamma or bias shifts, not both")
    if args.gamma is not None:
        if not isinstance(net.recurrent, LstmParams):
            warped = net.copy()
            warped.recurrent = warp_simplernn(net.recurrent, args.gamma)
        else:
            warped = net.copy()
            warped.recurrent = warp_lstm_theoretical(net.recurrent, args.gamma)
        applied = {"gamma": args.gamma}
    else:
        warped = apply_bias_shift(net, WarpShift(args.alpha_f, args.alpha_i))
        applied = {"alpha_f": args.alpha_f, "alpha_i": args.alpha_i}
    save_weights(warped, out / "weights.json")
    write_json(out / "warp_report.json", applied)
    print(f"warped weights written to {out / 'weights.json'}")
    return applied


def cmd_train(args) -> dict:
    """Train a network (fresh or from saved weights) on a sparse series."""
    out = _out_dir(args)
    series = _load_series(args.train, args.features, args.target)
    val = _load_series(args.val, args.features, args.target)
    cfg = _training_config(args)
    if args.init_weights:
        net = load_weights(args.init_weights)
    else:
        dense_units = tuple(int(u) for u in args.dense.split(",") if u.strip())
        arch = Architecture(
            features=series.n_features,
            cell=args.cell,
            units=args.units,
            dense_units=dense_units + (1,),
        )
        net = init_network(arch, args.seed)
    samples = make_windows(series, cfg.window, cfg.stride)
    trained, history = train(net, samples, val, cfg)
    save_weights(trained, out / "weights.json")
    write_csv(
        out / "history.csv",
        ["epoch", "train_loss", "val_loss"],
        [(h["epoch"], h["train_loss"], h["val_loss"]) for h in history],
    )
    best = min(history, key=lambda h: h["val_loss"]) if history else None
    report = {
        "n_samples": len(samples),
        "param_count": param_count(trained),
        "epochs_run": history[-1]["epoch"] if history else 0,
        "best_epoch": best["epoch"] if best else None,
        "best_val_loss": best["val_loss"] if best else None,
    }
    write_json(out / "train_report.json", report)
    print(f"trained {report['param_count']} parameters for {report['epochs_run']} epochs; "
          f"best validation loss {report['best_val_loss']}")
    return report


def cmd_evaluate(args) -> dict:
    """Predict over a series and report metrics at observed targets."""
    out = _out_dir(args)
    net = load_weights(args.weights)
    series = _load_series(args.data, args.features, args.target)
    preds = network_forward(net, series.features)
    write_csv(out / "predictions.csv", ["t", "prediction"], zip(series.t, preds))
    if series.n_observed == 0:
        raise EmptyDataError("no observed targets to evaluate against")
    m = metrics(series.target[series.mask], preds[series.mask])
    report = {"rmse": m.rmse, "bias": m.bias, "r2": m.r2, "n": m.n}
    if args.query_times:
        query = read_csv_columns(args.query_times)["t"]
        interpolated = interpolate_predictions(series.t.astype(float), preds, query)
        write_csv(out / "interpolated.csv", ["t", "prediction"], zip(query, interpolated))
        report["n_interpolated"] = int(query.size)
    write_json(out / "metrics.json", report)
    print(f"rmse={m.rmse:.6g} bias={m.bias:.6g} r2={m.r2:.6g} n={m.n}")
    return report


def _grid_from_args(args) -> WarpGrid:
    return WarpGrid.evenly_spaced(args.grid_size, args.grid_low, args.grid_high)


def cmd_grid_search(args) -> dict:
    """Fit bias shifts by exhaustive search (no fine-tuning)."""
    out = _out_dir(args)
    net = load_weights(args.weights)
    series = _load_series(args.train, args.features, args.target)
    grid = _grid_from_args(args)
    rows = []
    for rep in range(args.replications):
        seed = args.seed + rep
        result = grid_search_timewarp(net, series, grid)
        rows.append({
            "seed": seed,
            "alpha_f": result.best_shift.alpha_f,
            "alpha_i": result.best_shift.alpha_i,
            "train_rmse": result.best_rmse,
        })
        if rep == 0:
            write_csv(
                out / "grid_table.csv",
                ["alpha_f", "alpha_i", "rmse"],
                [(s.alpha_f, s.alpha_i, r) for s, r in result.table],
            )
            best = result
    report = {"metric": "train_rmse", "cells": grid.n_cells, "replications": rows}
    if args.test:
        test = _load_series(args.test, args.features, args.target)
        shifted = apply_bias_shift(net, best.best_shift)
        preds = network_forward(shifted, test.features)
        if test.n_observed == 0:
            raise EmptyDataError("test series has no observed targets")
        m = metrics(test.target[test.mask], preds[test.mask])
        report["test_metrics"] = {"rmse": m.rmse, "bias": m.bias, "r2": m.r2, "n": m.n}
        write_json(out / "test_metrics.json", report["test_metrics"])
    write_json(out / "selected.json", report)
    first = rows[0]
    print(f"selected shift ({first['alpha_f']:.6g}, {first['alpha_i']:.6g}) "
          f"with training RMSE {first['train_rmse']:.6g} over {grid.n_cells} cells")
    return report


def cmd_finetune(args) -> dict:
    """Fit bias shifts with per-cell fine-tuning, selected on validation RMSE."""
    out = _out_dir(args)
    net = load_weights(args.weights)
    series = _load_series(args.train, args.features, args.target)
    val = _load_series(args.val, args.features, args.target)
    grid = _grid_from_args(args)
    rows = []
    for rep in range(args.replications):
        cfg = _training_config(args, seed=args.seed + rep)
        tuned, result = timewarp_finetune(net, series, val, grid, cfg, n_jobs=args.threads)
        rows.append({
            "seed": cfg.seed,
            "alpha_f": result.best_shift.alpha_f,
            "alpha_i": result.best_shift.alpha_i,
            "val_rmse": result.best_rmse,
        })
        if rep == 0:
            save_weights(tuned, out / "weights.json")
            write_csv(
                out / "grid_table.csv",
                ["alpha_f", "alpha_i", "rmse"],
                [(s.alpha_f, s.alpha_i, r) for s, r in result.table],
            )
            best_net = tuned
    report = {"metric": "val_rmse", "cells": grid.n_cells, "replications": rows}
    if args.test:
        test = _load_series(args.test, args.features, args.target)
        preds = network_forward(best_net, test.features)
        if test.n_observed == 0:
            raise EmptyDataError("test series has no observed targets")
        m = metrics(test.target[test.mask], preds[test.mask])
        report["test_metrics"] = {"rmse": m.rmse, "bias": m.bias, "r2": m.r2, "n": m.n}
        write_json(out / "test_metrics.json", report["test_metrics"])
    write_json(out / "selected.json", report)
    first = rows[0]
    print(f"selected shift ({first['alpha_f']:.6g}, {first['alpha_i']:.6g}) "
          f"with validation RMSE {first['val_rmse']:.6g}")
    return report


def cmd_diagnose(args) -> dict:
    """Emit ACF and PACF tables (and optional plots) for one series column."""
    out = _out_dir(args)
    columns = read_csv_columns(args.data)
    if args.column not in columns:
        raise ParseError(f"column {args.column!r} not found; file has {sorted(columns)}")
    series = columns[args.column]
    if np.isnan(series).any():
        raise DomainError("diagnostics need a fully observed series (NaN present)")
    if series.size < 4 * args.acf_lags:
        raise DomainError(
            f"series of length {series.size} is too short for {args.acf_lags} lags "
            "(need at least 4x)"
        )
    acf_result = acf(series, args.acf_lags)
    pacf_result = pacf(series, args.pacf_lags)
    for name, res in (("acf", acf_result), ("pacf", pacf_result)):
        write_csv(
            out / f"{name}.csv",
            ["lag", "value", "ci_bound"],
            [(int(lag), val, res.ci_bound) for lag, val in zip(res.lags, res.values)],
        )
        if args.plot:
            _plot_lines(out / f"{name}.svg", res.lags,
                        {name.upper(): res.values,
                         "+95%": np.full_like(res.values, res.ci_bound),
                         "-95%": np.full_like(res.values, -res.ci_bound)},
                        name.upper(), "lag", "correlation")
    report = {
        "n": int(series.size),
        "ci_bound": acf_result.ci_bound,
        "acf_lag1": float(acf_result.values[1]) if args.acf_lags >= 1 else None,
        "pacf_lag1": float(pacf_result.values[1]) if args.pacf_lags >= 1 else None,
    }
    write_json(out / "diagnose_report.json", report)
    print(f"acf lag-1 {report['acf_lag1']:.4f}, pacf lag-1 {report['pacf_lag1']:.4f}, "
          f"white-noise band +-{report['ci_bound']:.4f}")
    return report


def cmd_simulate_fmc(args) -> dict:
    """Run the open-loop fuel-moisture forecast over hourly weather."""
    out = _out_dir(args)
    t, weather = read_weather_csv(args.weather)
    hyper = FmcOdeHyper(r0=args.r0, S=args.saturation, Tr=args.rain_delay, rs=args.rain_sat)
    trajectory = fmc_forecast(args.m0, weather, FuelClass(args.t_lag), hyper)
    rows = [(int(t[0]) - 1, trajectory[0])] + [
        (int(t[i]), trajectory[i + 1]) for i in range(len(weather))
    ]
    write_csv(out / "forecast.csv", ["t", "fmc"], rows)
    if args.plot:
        _plot_lines(out / "forecast.svg", [r[0] for r in rows], {"fmc": [r[1] for r in rows]},
                    f"{args.t_lag:g}-hour fuel forecast", "hour", "moisture (%)")
    report = {
        "t_lag": args.t_lag,
        "hours": len(weather),
        "final_fmc": float(trajectory[-1]),
        "min_fmc": float(trajectory.min()),
        "max_fmc": float(trajectory.max()),
    }
    write_json(out / "fmc_report.json", report)
    print(f"forecast over {report['hours']} hours; final moisture {report['final_fmc']:.3f}%")
    return report


# ---------------------------------------------------------------------------
# Parser assembly


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--config", type=str, default=None, help="JSON file with option defaults")
    parser.add_argument("--out", type=str, default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="parallel workers where supported")
    parser.add_argument("--plot", action="store_true", help="also write SVG charts")


def _add_training_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window", type=int, default=48)
    parser.add_argument("--stride", type=int, default=12)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--epochs", type=int, default=100)
    parser.add_argument("--patience", type=int, default=5)
    parser.add_argument("--learning-rate", type=float, default=0.01)
    parser.add_argument("--optimizer", choices=("sgd", "adam"), default="sgd")
    parser.add_argument("--clip-norm", type=float, default=1.0, help="0 disables clipping")
    parser.add_argument("--freeze", choices=("none", "recurrent", "dense"), default="none")


def _add_series_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--features", required=True, help="comma-separated feature column names")
    parser.add_argument("--target", required=True, help="target column name")


def _add_grid_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid-size", type=int, default=25)
    parser.add_argument("--grid-low", type=float, default=-5.0)
    parser.add_argument("--grid-high", type=float, default=5.0)
    parser.add_argument("--replications", type=int, default=1)


def build_parser() -> tuple:
    parser = argparse.ArgumentParser(
        prog="lagwarp",
        description="Time-warping recurrent networks for time-lag dynamics",
    )
    parser.add_argument("--version", action="version", version=f"lagwarp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: dict = {}
    original_add_parser = sub.add_parser

    def add_parser(name, **kwargs):
        subparsers[name] = original_add_parser(name, **kwargs)
        return subparsers[name]

    sub.add_parser = add_parser  # type: ignore[method-assign]

    p = sub.add_parser("newton-demo", help="cooling-curve reproduction with warped cells")
    p.add_argument("--t0", type=float, default=50.0)
    p.add_argument("--ta", type=float, default=20.0)
    p.add_argument("--k-min", type=float, default=0.05)
    p.add_argument("--k-max", type=float, default=0.5)
    p.add_argument("--k-count", type=int, default=10)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--epsilon", type=float, default=0.003)
    p.add_argument("--bound", type=float, default=50.0, help="uniform bound M on the curves")
    p.add_argument("--output-gate-bias", type=float, default=None)
    p.set_defaults(func=cmd_newton_demo)
    _add_common(p)

    p = sub.add_parser("construct", help="build a provable cell and save weights")
    p.add_argument("--kind", choices=("simple", "tanh", "lstm"), required=True)
    p.add_argument("--a", type=float, required=True, help="retention coefficient in (0,1)")
    p.add_argument("--z0", type=float, default=0.0)
    p.add_argument("--epsilon", type=float, default=0.003)
    p.add_argument("--bound", type=float, default=50.0)
    p.add_argument("--horizon", type=int, default=50)
    p.add_argument("--output-gate-bias", type=float, default=None)
    p.set_defaults(func=cmd_construct)
    _add_common(p)

    p = sub.add_parser("warp", help="warp saved weights by gamma or a bias shift")
    p.add_argument("--weights", required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--alpha-f", type=float, default=0.0)
    p.add_argument("--alpha-i", type=float, default=0.0)
    p.set_defaults(func=cmd_warp)
    _add_common(p)

    p = sub.add_parser("train", help="train a network on a sparse series")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    _add_series_options(p)
    p.add_argument("--init-weights", default=None)
    p.add_argument("--cell", choices=("lstm", "simple"), default="lstm")
    p.add_argument("--units", type=int, default=64)
    p.add_argument("--dense", default="32,16", help="hidden dense widths; output 1 is appended")
    _add_training_options(p)
    p.set_defaults(func=cmd_train)
    _add_common(p)

    p = sub.add_parser("evaluate", help="predict over a series and report metrics")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True)
    _add_series_options(p)
    p.add_argument("--query-times", default=None,
                   help="CSV with a fractional-hour column t for interpolated predictions")
    p.set_defaults(func=cmd_evaluate)
    _add_common(p)

    p = sub.add_parser("grid-search", help="fit bias shifts without fine-tuning")
    p.add_argument("--weights", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", default=None)
    _add_series_options(p)
    _add_grid_options(p)
    p.set_defaults(func=cmd_grid_search)
    _add_common(p)

    p = sub.add_parser("finetune", help="fit bias shifts with per-cell fine-tuning")
    p.add_argument("--weights", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--test", default=None)
    _add_series_options(p)
    _add_grid_options(p)
    _add_training_options(p)
    p.set_defaults(func=cmd_finetune)
    _add_common(p)

    p = sub.add_parser("diagnose", help="ACF/PACF tables for a series column")
    p.add_argument("--data", required=True)
    p.add_argument("--column", required=True)
    p.add_argument("--acf-lags", type=int, default=50)
    p.add_argument("--pacf-lags", type=int, default=30)
    p.set_defaults(func=cmd_diagnose)
    _add_common(p)

    p = sub.add_parser("simulate-fmc", help="open-loop fuel-moisture forecast")
    p.add_argument("--weather", required=True)
    p.add_argument("--t-lag", type=float, required=True)
    p.add_argument("--m0", type=float, required=True)
    p.add_argument("--r0", type=float, default=0.05)
    p.add_argument("--saturation", type=float, default=250.0)
    p.add_argument("--rain-delay", type=float, default=14.0)
    p.add_argument("--rain-sat", type=float, default=8.0)
    p.set_defaults(func=cmd_simulate_fmc)
    _add_common(p)

    return parser, subparsers


def _apply_config_defaults(subparsers: dict, argv: list) -> None:
    """Load ``--config`` JSON and install its values as defaults on the
    invoked subcommand; explicit flags still win."""
    path = None
    command = None
    for idx, token in enumerate(argv):
        if token == "--config" and idx + 1 < len(argv):
            path = argv[idx + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
        elif command is None and not token.startswith("-"):
            command = token
    if path is None or command not in subparsers:
        return
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ParseError("config file must hold a flat JSON object")
    target = subparsers[command]
    known = {action.dest for action in target._actions}
    unknown = sorted(set(config) - known)
    if unknown:
        raise ParseError(f"config keys not recognized by {command!r}: {unknown}")
    target.set_defaults(**config)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        _apply_config_defaults(subparsers, argv)
        args = parser.parse_args(argv)
        args.func(args)
        _write_manifest(args, _out_dir(args))
    except HANDLED_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return _exit_code(err)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
