"""Finite joint distributions as dense tables, exact (Fraction) or float64.

Binary variables use the sign convention index 0 -> +1, index 1 -> -1 when
converting to and from expectation values.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InfeasibleMoments,
    NegativeEntry,
    NonBinaryAxis,
    NotNormalized,
    ShapeMismatch,
    UnknownVariable,
    ZeroConditioningEvent,
)

NORMALIZATION_TOL = 1e-12
BINARY_SIGNS = (1, -1)


def is_exact(values) -> bool:
    return isinstance(values, np.ndarray) and values.dtype == object


def as_fraction_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(*arr.shape):
        v = arr[idx]
        out[idx] = Fraction(v) if not isinstance(v, str) else Fraction(v.strip())
    return out


def to_float(values) -> np.ndarray:
    return np.asarray(values, dtype=float) if not is_exact(values) else np.vectorize(float, otypes=[float])(values)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    axes: tuple  # ((name, cardinality), ...)
    values: np.ndarray = field(repr=False)

    @property
    def names(self) -> tuple:
        return tuple(a[0] for a in self.axes)

    @property
    def cards(self) -> tuple:
        return tuple(a[1] for a in self.axes)

    @property
    def exact(self) -> bool:
        return is_exact(self.values)

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownVariable(f"distribution has no axis {name!r}") from None

    def matrix(self) -> np.ndarray:
        if len(self.axes) != 2:
            raise ShapeMismatch(f"expected 2 axes, got {len(self.axes)}")
        return self.values

    def as_float(self) -> "JointDistribution":
        return JointDistribution(self.axes, to_float(self.values))

    def allclose(self, other: "JointDistribution", atol: float = 1e-12) -> bool:
        return self.axes == other.axes and np.allclose(
            to_float(self.values), to_float(other.values), rtol=0.0, atol=atol)


@dataclass(frozen=True, eq=False)
class ConditionalSlice:
    base: JointDistribution
    conditioning_variable: tuple
    conditioning_value: tuple
    probability: object
    dist: JointDistribution

    @property
    def values(self):
        return self.dist.values


@dataclass(frozen=True)
class ExpectationTable:
    """Moments ``<V_i1 ... V_ik>`` of n ±1 variables, keyed by sorted index tuples."""

    names: tuple
    moments: Mapping

    @property
    def n(self) -> int:
        return len(self.names)

    def __getitem__(self, key):
        if isinstance(key, str):
            key = (key,)
        idx = tuple(sorted(self.names.index(k) if isinstance(k, str) else k for k in key))
        return self.moments[idx]


def _normalize_axes(axes) -> tuple:
    out = []
    for a in axes:
        if isinstance(a, Mapping):
            out.append((str(a["name"]), int(a["cardinality"])))
        else:
            name, card = a
            out.append((str(name), int(card)))
    return tuple(out)


def from_matrix(axes, values, tolerance: float = NORMALIZATION_TOL) -> JointDistribution:
    """Validate and wrap a probability table.

    Entries that are Fractions (or rational strings such as ``"1/6"``) keep the
    exact backend; anything else becomes float64.
    """
    axes = _normalize_axes(axes)
    raw = np.asarray(values, dtype=object)
    exact = raw.size > 0 and all(isinstance(v, (Fraction, str, int, np.integer)) for v in raw.flat) \
        and any(isinstance(v, (Fraction, str)) for v in raw.flat)
    arr = as_fraction_array(raw) if exact else np.asarray(values, dtype=float)
    shape = tuple(c for _, c in axes)
    if arr.shape != shape:
        if arr.size == int(np.prod(shape)):
            arr = arr.reshape(shape)
        else:
            raise ShapeMismatch(f"values of shape {arr.shape} do not match axes {shape}")
    if exact:
        if any(v < 0 for v in arr.flat):
            raise NegativeEntry("negative probability")
        total = sum(arr.flat, Fraction(0))
        if abs(total - 1) > Fraction(tolerance):
            raise NotNormalized(f"entries sum to {total}")
        if total != 1:
            arr = arr / total
    else:
        if not np.all(np.isfinite(arr)):
            raise NegativeEntry("non-finite entry")
        if np.any(arr < 0):
            raise NegativeEntry(f"negative entry {arr.min()}")
        total = float(arr.sum())
        if abs(total - 1.0) > tolerance:
            raise NotNormalized(f"entries sum to {total!r}")
        arr = arr / total
    return JointDistribution(axes, arr)


def marginalize(dist: JointDistribution, keep: Iterable[str]) -> JointDistribution:
    keep = list(keep)
    for k in keep:
        dist.axis(k)
    kept = [i for i, n in enumerate(dist.names) if n in keep]
    drop = tuple(i for i in range(len(dist.axes)) if i not in kept)
    vals = dist.values.sum(axis=drop) if drop else dist.values.copy()
    return JointDistribution(tuple(dist.axes[i] for i in kept), vals)


def condition_slice(dist: JointDistribution, z, variable=None) -> ConditionalSlice:
    """``P(rest | variable = z)``; ``variable`` defaults to the last axis.

    ``variable``/``z`` may be tuples to condition on several variables jointly.
    """
    if variable is None:
        variable = dist.names[-1]
    variables = (variable,) if isinstance(variable, str) else tuple(variable)
    values = (z,) if np.ndim(z) == 0 else tuple(z)
    if len(variables) != len(values):
        raise ShapeMismatch("one value per conditioning variable required")
    index = [slice(None)] * len(dist.axes)
    for v, val in zip(variables, values):
        ax = dist.axis(v)
        if not 0 <= int(val) < dist.cards[ax]:
            raise ShapeMismatch(f"value {val} out of range for {v!r}")
        index[ax] = int(val)
    sub = dist.values[tuple(index)]
    p = sub.sum() if dist.exact else float(sub.sum())
    if p == 0 or (not dist.exact and p <= 0.0):
        raise ZeroConditioningEvent(f"P({variables}={values}) = 0")
    rest = tuple(a for a in dist.axes if a[0] not in variables)
    sliced = JointDistribution(rest, sub / p)
    return ConditionalSlice(dist, variables, values, p, sliced)


def _check_binary(dist: JointDistribution):
    for name, card in dist.axes:
        if card != 2:
            raise NonBinaryAxis(f"axis {name!r} has cardinality {card}")


def probs_to_expectations(dist: JointDistribution) -> ExpectationTable:
    """All moments ``<V_i1...V_ik> = Σ_v v_i1...v_ik P(v)`` of a binary distribution."""
    _check_binary(dist)
    n = len(dist.axes)
    zero = Fraction(0) if dist.exact else 0.0
    moments = {}
    for k in range(1, n + 1):
        for subset in itertools.combinations(range(n), k):
            acc = zero
            for idx in np.ndindex(*dist.cards):
                sign = 1
                for i in subset:
                    sign *= BINARY_SIGNS[idx[i]]
                acc = acc + sign * dist.values[idx]
            moments[subset] = acc
    return ExpectationTable(dist.names, moments)


def expectations_to_probs(table: ExpectationTable, tolerance: float = NORMALIZATION_TOL) -> JointDistribution:
    """Probabilities from moments: ``P(v) = 2^-n (1 + Σ_S Π_{i∈S} v_i <V_S>)``."""
    n = table.n
    subsets = [s for k in range(1, n + 1) for s in itertools.combinations(range(n), k)]
    missing = [s for s in subsets if s not in table.moments]
    if missing:
        raise ShapeMismatch(f"missing moments for index sets {missing}")
    exact = all(isinstance(table.moments[s], (Fraction, int)) for s in subsets)
    one = Fraction(1) if exact else 1.0
    scale = Fraction(1, 2 ** n) if exact else 2.0 ** -n
    out = np.empty((2,) * n, dtype=object if exact else float)
    for idx in np.ndindex(*(2,) * n):
        acc = one
        for s in subsets:
            sign = 1
            for i in s:
                sign *= BINARY_SIGNS[idx[i]]
            acc = acc + sign * table.moments[s]
        out[idx] = scale * acc
    low = min(out.flat)
    if low < -tolerance:
        raise InfeasibleMoments(f"moments imply probability {float(low):.6g} < 0")
    if not exact:
        out = np.maximum(out, 0.0)
    else:
        out = np.array([max(v, Fraction(0)) for v in out.flat], dtype=object).reshape(out.shape)
    return from_matrix([(name, 2) for name in table.names], out, tolerance=max(tolerance, NORMALIZATION_TOL))


def expectation_table(names: Sequence[str], moments: Mapping) -> ExpectationTable:
    """Build a table from moments keyed by variable names or index tuples."""
    names = tuple(names)
    out = {}
    for key, val in moments.items():
        if isinstance(key, str):
            key = tuple(key.split(",")) if "," in key else (key,)
        idx = tuple(sorted(names.index(k) if isinstance(k, str) else int(k) for k in key))
        out[idx] = val
    return ExpectationTable(names, out)
