"""Bit-exact model serialization and CSV data ingestion.

Weights are stored as indented JSON with one named tensor per parameter,
gate order (f, i, g, o), and row-major nested arrays.  Python's shortest
round-trip float representation preserves all 64 bits, so save -> load ->
save reproduces the file byte for byte.  A text format was chosen over a
binary one because auditability matters more than size here.

CSV dialect everywhere: comma separated, header row, UTF-8, '.' decimal
separator, and empty or NaN fields for missing targets.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError, ShapeError, WeightsFormatError
from .fmc import WeatherRow
from .rnn import GATE_ORDER, DenseParams, LstmParams, Network, RecurrentState, SimpleRnnParams
from .training import SparseSeries

__all__ = [
    "FORMAT_VERSION",
    "network_to_dict",
    "network_from_dict",
    "save_weights",
    "load_weights",
    "read_sparse_series",
    "read_weather_csv",
    "write_csv",
    "read_csv_columns",
    "write_json",
]

FORMAT_VERSION = 1


def _tolist(a: np.ndarray):
    return [float(v) for v in a] if a.ndim == 1 else [[float(v) for v in row] for row in a]


def network_to_dict(net: Network) -> dict:
    """JSON-ready description of the network: architecture plus tensors."""
    rec = net.recurrent
    if isinstance(rec, LstmParams):
        arch = {
            "type": "lstm",
            "units": rec.units,
            "features": rec.features,
            "candidate_activation": rec.candidate_activation,
            "cell_output_activation": rec.cell_output_activation,
        }
        layer = {
            "w_x": {g: _tolist(rec.w_x[g]) for g in GATE_ORDER},
            "w_h": {g: _tolist(rec.w_h[g]) for g in GATE_ORDER},
            "b": {g: _tolist(rec.b[g]) for g in GATE_ORDER},
        }
    else:
        arch = {
            "type": "simple_rnn",
            "units": rec.units,
            "features": rec.features,
            "activation": rec.activation,
        }
        layer = {"w_x": _tolist(rec.w_x), "w_h": _tolist(rec.w_h), "b": _tolist(rec.b)}
    doc = {
        "format_version": FORMAT_VERSION,
        "architecture": [arch]
        + [{"type": "dense", "units": d.units, "activation": d.activation} for d in net.dense],
        "layers": {
            "recurrent": layer,
            "dense": [{"w": _tolist(d.w), "b": _tolist(d.b)} for d in net.dense],
        },
        "trainable": {
            "recurrent": bool(net.recurrent_trainable),
            "dense": [bool(flag) for flag in net.dense_trainable],
        },
    }
    if net.initial_state is not None:
        doc["initial_state"] = {
            "h": _tolist(net.initial_state.h),
            "c": None if net.initial_state.c is None else _tolist(net.initial_state.c),
        }
    else:
        doc["initial_state"] = None
    return doc


def network_from_dict(doc: dict) -> Network:
    """Rebuild a network, validating version, structure, and shapes."""
    if not isinstance(doc, dict):
        raise WeightsFormatError("weights document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise WeightsFormatError(f"unsupported format version {version!r}; expected {FORMAT_VERSION}")
    try:
        arch = doc["architecture"]
        layers = doc["layers"]
        rec_arch = arch[0]
        rec_doc = layers["recurrent"]
        dense_docs = layers["dense"]
        trainable = doc["trainable"]
    except (KeyError, IndexError, TypeError) as exc:
        raise WeightsFormatError(f"weights document is missing required field: {exc}") from exc

    if rec_arch.get("type") == "lstm":
        recurrent: SimpleRnnParams | LstmParams = LstmParams(
            {g: np.asarray(rec_doc["w_x"][g], dtype=np.float64) for g in GATE_ORDER},
            {g: np.asarray(rec_doc["w_h"][g], dtype=np.float64) for g in GATE_ORDER},
            {g: np.asarray(rec_doc["b"][g], dtype=np.float64) for g in GATE_ORDER},
            rec_arch.get("candidate_activation", "tanh"),
            rec_arch.get("cell_output_activation", "tanh"),
        )
    elif rec_arch.get("type") == "simple_rnn":
        recurrent = SimpleRnnParams(
            np.asarray(rec_doc["w_x"], dtype=np.float64),
            np.asarray(rec_doc["w_h"], dtype=np.float64),
            np.asarray(rec_doc["b"], dtype=np.float64),
            rec_arch.get("activation", "tanh"),
        )
    else:
        raise WeightsFormatError(f"unknown recurrent layer type {rec_arch.get('type')!r}")

    if len(dense_docs) != len(arch) - 1:
        raise WeightsFormatError("architecture and dense tensor counts disagree")
    dense = []
    for spec, tensors in zip(arch[1:], dense_docs):
        layer = DenseParams(
            np.asarray(tensors["w"], dtype=np.float64),
            np.asarray(tensors["b"], dtype=np.float64),
            spec.get("activation", "relu"),
        )
        if layer.units != spec.get("units"):
            raise ShapeError(
                f"dense tensor has {layer.units} units but architecture declares {spec.get('units')}"
            )
        dense.append(layer)

    declared = (rec_arch.get("units"), rec_arch.get("features"))
    if declared != (recurrent.units, recurrent.features):
        raise ShapeError(
            f"recurrent tensors have (units, features) = ({recurrent.units}, {recurrent.features}) "
            f"but architecture declares {declared}"
        )

    state_doc = doc.get("initial_state")
    initial_state = None
    if state_doc is not None:
        initial_state = RecurrentState(
            np.asarray(state_doc["h"], dtype=np.float64),
            None if state_doc.get("c") is None else np.asarray(state_doc["c"], dtype=np.float64),
        )
    return Network(
        recurrent,
        dense,
        bool(trainable.get("recurrent", True)),
        [bool(f) for f in trainable.get("dense", [True] * len(dense))],
        initial_state,
    )


def save_weights(net: Network, path) -> None:
    """Write the network as canonical, reproducible JSON."""
    Path(path).write_text(json.dumps(network_to_dict(net), indent=2) + "\n", encoding="utf-8")


def load_weights(path) -> Network:
    """Read a weights file; bad structure or shapes raise load errors."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise WeightsFormatError(f"weights file is not valid JSON: {exc}") from exc
    return network_from_dict(doc)


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ParseError(f"row {row}: column {column!r} has non-numeric value {text!r}") from exc


def read_sparse_series(path, feature_columns, target_column: str) -> SparseSeries:
    """Load an hourly series with sparse targets from CSV.

    ``t`` must be a strictly increasing integer hour index advancing by 1
    per row.  Feature gaps are an error; a target that is empty or a NaN
    literal marks the row as unobserved.  Row numbers in error messages are
    1-based file lines (the header is line 1).
    """
    feature_columns = list(feature_columns)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in ["t", *feature_columns, target_column] if c not in header]
        if missing:
            raise ParseError(f"missing required columns: {missing}")
        t_values: list[int] = []
        rows: list[list[float]] = []
        targets: list[float] = []
        mask: list[bool] = []
        for line, record in enumerate(reader, start=2):
            raw_t = (record.get("t") or "").strip()
            try:
                t = int(raw_t)
            except ValueError as exc:
                raise ParseError(f"row {line}: hour index {raw_t!r} is not an integer") from exc
            if t_values and t != t_values[-1] + 1:
                raise ParseError(
                    f"row {line}: hour index {t} does not follow {t_values[-1]} "
                    "(duplicates and gaps are not allowed)"
                )
            t_values.append(t)
            feats = []
            for col in feature_columns:
                cell = (record.get(col) or "").strip()
                if cell == "" or cell.lower() == "nan":
                    raise ParseError(f"row {line}: feature {col!r} is missing")
                feats.append(_parse_float(cell, line, col))
            rows.append(feats)
            cell = (record.get(target_column) or "").strip()
            if cell == "" or cell.lower() == "nan":
                targets.append(float("nan"))
                mask.append(False)
            else:
                value = _parse_float(cell, line, target_column)
                targets.append(value)
                mask.append(math.isfinite(value))
    if not t_values:
        raise ParseError("file contains a header but no data rows")
    return SparseSeries(
        np.array(t_values), np.array(rows, dtype=np.float64), np.array(targets), np.array(mask)
    )


def read_weather_csv(path):
    """Load hourly weather rows (t, temp_c, rh, rain[, solar, wind])."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in ("t", "temp_c", "rh", "rain") if c not in header]
        if missing:
            raise ParseError(f"missing required columns: {missing}")
        t_values: list[int] = []
        rows: list[WeatherRow] = []
        for line, record in enumerate(reader, start=2):
            try:
                t_values.append(int((record.get("t") or "").strip()))
            except ValueError as exc:
                raise ParseError(f"row {line}: hour index is not an integer") from exc
            optional = {}
            for col in ("solar", "wind"):
                cell = (record.get(col) or "").strip()
                if cell and cell.lower() != "nan":
                    optional[col] = _parse_float(cell, line, col)
            rows.append(
                WeatherRow(
                    temp_c=_parse_float((record.get("temp_c") or "").strip(), line, "temp_c"),
                    rh=_parse_float((record.get("rh") or "").strip(), line, "rh"),
                    rain=_parse_float((record.get("rain") or "").strip(), line, "rain"),
                    **optional,
                )
            )
    if not rows:
        raise ParseError("file contains a header but no data rows")
    return np.array(t_values), rows


def _format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "NaN" if math.isnan(value) else repr(value)
    return str(value)


def write_csv(path, header, rows) -> None:
    """Write rows with full-precision floats (repr round-trips 64 bits)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def read_csv_columns(path) -> dict:
    """Read a numeric CSV back as ``{column: float64 array}``.

    Empty cells and NaN literals load as NaN, so files written by
    :func:`write_csv` round-trip losslessly.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise ParseError("file has no header row")
        columns: dict[str, list[float]] = {name: [] for name in header}
        for line, record in enumerate(reader, start=2):
            for name in header:
                cell = (record.get(name) or "").strip()
                if cell == "" or cell.lower() == "nan":
                    columns[name].append(float("nan"))
                else:
                    columns[name].append(_parse_float(cell, line, name))
    return {name: np.array(values, dtype=np.float64) for name, values in columns.items()}


def write_json(path, obj) -> None:
    """Write a JSON document with stable formatting."""
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n", encoding="utf-8")
