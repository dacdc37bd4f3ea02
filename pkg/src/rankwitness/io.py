"""File formats: JSON graphs, JSON/CSV distributions, JSON factorizations."""
from __future__ import annotations

import csv
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .dist import BINARY_SIGNS, JointDistribution, from_matrix
from .errors import RankWitnessError, ShapeMismatch
from .graph import CausalGraph, graph_from_dict, graph_to_dict


class InputError(RankWitnessError):
    """Unreadable or malformed input file."""


def load_json(path) -> object:
    p = Path(path)
    try:
        with p.open() as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def _parse_value(v, rational: bool):
    if rational:
        return Fraction(v) if not isinstance(v, str) else Fraction(v.strip())
    return float(v)


def dist_from_dict(data) -> JointDistribution:
    try:
        axes = [(a["name"], int(a["cardinality"])) for a in data["axes"]]
        raw = data["values"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"distribution JSON needs 'axes' and 'values' ({exc})") from None
    rational = data.get("encoding", "float") == "rational"
    flat = np.array([_parse_value(v, rational) for v in np.asarray(raw, dtype=object).ravel()],
                    dtype=object if rational else float)
    shape = tuple(c for _, c in axes)
    if flat.size != int(np.prod(shape)):
        raise ShapeMismatch(f"{flat.size} values for axes of shape {shape}")
    values = flat.reshape(shape)
    signs = data.get("binary_encoding")
    if signs is not None and list(signs) != list(BINARY_SIGNS):
        if sorted(signs) != [-1, 1]:
            raise InputError(f"binary_encoding must list the signs of index 0 and 1, got {signs}")
        # flip binary axes into the internal index 0 -> +1 convention
        for ax, (_, card) in enumerate(axes):
            if card == 2:
                values = np.flip(values, axis=ax)
    return from_matrix(axes, values)


def dist_to_dict(dist: JointDistribution) -> dict:
    if dist.exact:
        values = [str(Fraction(v)) for v in dist.values.ravel()]
        enc = "rational"
    else:
        values = [float(v) for v in np.asarray(dist.values, dtype=float).ravel()]
        enc = "float"
    out = {"axes": [{"name": n, "cardinality": int(c)} for n, c in dist.axes],
           "values": values, "encoding": enc}
    if any(c == 2 for c in dist.cards):
        out["binary_encoding"] = list(BINARY_SIGNS)
    return out


def dist_from_csv(path, names=("X", "Y")) -> JointDistribution:
    try:
        with Path(path).open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    rational = any("/" in c for r in rows for c in r)
    values = np.array([[_parse_value(c, rational) for c in r] for r in rows],
                      dtype=object if rational else float)
    if values.ndim != 2:
        raise ShapeMismatch("CSV rows must all have the same length")
    return from_matrix([(names[0], values.shape[0]), (names[1], values.shape[1])], values)


def load_distribution(path) -> JointDistribution:
    if str(path).lower().endswith(".csv"):
        return dist_from_csv(path)
    return dist_from_dict(load_json(path))


def load_matrix(path) -> np.ndarray:
    """A 2-d nonnegative matrix from a distribution JSON, a CSV, or ``{"matrix": [[...]]}``.

    Bare matrices need not be normalized.
    """
    if str(path).lower().endswith(".csv"):
        return dist_from_csv(path).matrix()
    data = load_json(path)
    if isinstance(data, dict) and "axes" in data:
        dist = dist_from_dict(data)
        if len(dist.axes) != 2:
            raise ShapeMismatch(f"expected a 2-axis distribution, got {len(dist.axes)} axes")
        return dist.matrix()
    rows = data["matrix"] if isinstance(data, dict) and "matrix" in data else data
    if not isinstance(rows, list):
        raise InputError("matrix JSON must be a nested list or an object with 'matrix' or 'axes'")
    rational = any(isinstance(v, str) for r in rows for v in r)
    arr = np.array([[_parse_value(v, rational) for v in r] for r in rows],
                   dtype=object if rational else float)
    if arr.ndim != 2:
        raise ShapeMismatch("matrix rows must all have the same length")
    if min(arr.flat) < 0:
        raise InputError("matrix has a negative entry")
    return arr


def load_graph(path) -> CausalGraph:
    data = load_json(path)
    try:
        return graph_from_dict(data)
    except (KeyError, TypeError) as exc:
        raise InputError(f"graph JSON needs 'variables' and 'edges' ({exc})") from None


def dump_graph(graph: CausalGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2)
