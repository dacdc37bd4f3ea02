"""Accept or refute causal hypotheses with hidden variables of promised cardinality.

A hidden set S that d-separates X and Y (given observed Z) forces
``rank₊(P(X, Y | Z=z)) ≤ |S|`` for every z. A certified rank lower bound above
|S| therefore refutes the hypothesis, i.e. witnesses a direct influence.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .dist import JointDistribution, condition_slice, marginalize, to_float
from .errors import InvalidQuery, NoObservedData, OutOfRange, UnknownVariable
from .graph import CausalGraph, find_hidden_separators
from .nnrank import RankConfig, nonnegative_rank

log = logging.getLogger(__name__)

SLICE_MIN_PROB = 1e-9


class Status(str, Enum):
    REFUTED = "Refuted"
    CONSISTENT = "Consistent"
    INCONCLUSIVE = "Inconclusive"


EXIT_CODES = {Status.CONSISTENT: 0, Status.REFUTED: 3, Status.INCONCLUSIVE: 4}


@dataclass(frozen=True)
class SliceRecord:
    slice_value: tuple
    rank_lower: int
    rank_upper: int
    separator_cardinality: int
    status: Status
    probability: float = 1.0

    def to_dict(self) -> dict:
        return {
            "slice": list(self.slice_value),
            "probability": self.probability,
            "rank_lower": self.rank_lower,
            "rank_upper": self.rank_upper,
            "separator_cardinality": self.separator_cardinality,
            "status": self.status.value,
        }


@dataclass(frozen=True)
class WitnessVerdict:
    status: Status
    evidence: tuple = ()
    message: str = ""
    notes: tuple = ()

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "message": self.message,
            "evidence": [e.to_dict() if hasattr(e, "to_dict") else e for e in self.evidence],
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class CausalHypothesis:
    graph: CausalGraph
    target_pair: tuple
    conditioning: frozenset = frozenset()

    def __post_init__(self):
        x, y = self.target_pair
        for v in (x, y, *self.conditioning):
            if not self.graph.spec(v).observed:
                raise InvalidQuery(f"{v!r} must be observed")
        if x == y or x in self.conditioning or y in self.conditioning:
            raise InvalidQuery("target pair and conditioning set must be disjoint")


def _slice_status(lower: int, upper: int, card: int) -> Status:
    if lower > card:
        return Status.REFUTED
    if upper <= card:
        return Status.CONSISTENT
    return Status.INCONCLUSIVE


def corollary1_check(dist, separator_cardinality: int, config: Optional[RankConfig] = None,
                     slice_value: tuple = ()) -> WitnessVerdict:
    """Compare the nonnegative rank of a two-variable table with a separator cardinality."""
    matrix = dist.matrix() if isinstance(dist, JointDistribution) else np.asarray(dist)
    bounds = nonnegative_rank(matrix, config)
    status = _slice_status(bounds.lower, bounds.upper, separator_cardinality)
    rec = SliceRecord(tuple(slice_value), bounds.lower, bounds.upper, separator_cardinality, status)
    if status is Status.REFUTED:
        msg = (f"nonnegative rank >= {bounds.lower} exceeds separator cardinality "
               f"{separator_cardinality}: a direct causal influence is required")
    elif status is Status.CONSISTENT:
        msg = f"nonnegative rank <= {bounds.upper} fits within separator cardinality {separator_cardinality}"
    else:
        msg = (f"nonnegative rank in [{bounds.lower}, {bounds.upper}] straddles separator "
               f"cardinality {separator_cardinality}")
    return WitnessVerdict(status, (rec,), msg, bounds.notes)


def aggregate(records: Sequence[SliceRecord]) -> Status:
    statuses = {r.status for r in records}
    if Status.REFUTED in statuses:
        return Status.REFUTED
    if statuses <= {Status.CONSISTENT}:
        return Status.CONSISTENT
    return Status.INCONCLUSIVE


def witness_direct_influence(hypothesis: CausalHypothesis, data: JointDistribution,
                             config: Optional[RankConfig] = None) -> WitnessVerdict:
    """Test a hypothesis slice by slice over the observed conditioning values."""
    x, y = hypothesis.target_pair
    cond = sorted(hypothesis.conditioning, key=hypothesis.graph.names.index)
    needed = [x, y, *cond]
    missing = [v for v in needed if v not in data.names]
    if missing:
        raise NoObservedData(f"data lacks observed variables {missing}")
    for v in needed:
        if data.cards[data.axis(v)] != hypothesis.graph.spec(v).cardinality:
            raise InvalidQuery(f"cardinality of {v!r} differs between graph and data")

    separators = find_hidden_separators(hypothesis.graph, x, y, cond)
    if not separators:
        return WitnessVerdict(
            Status.CONSISTENT, (),
            "no hidden set d-separates the pair in this hypothesis; nothing to test",
            ("vacuous: hypothesis graph allows direct dependence",))
    card = max(c for _, c in separators)
    sep_desc = [{"hidden": sorted(s), "cardinality": c} for s, c in separators]

    data = marginalize(data, needed)
    # reorder axes to (x, y, *cond)
    order = [data.axis(v) for v in needed]
    data = JointDistribution(tuple(data.axes[i] for i in order), np.transpose(data.values, order))

    notes = [f"separators: {sep_desc}; testing against cardinality {card}"]
    records = []
    assignments = itertools.product(*(range(data.cards[data.axis(c)]) for c in cond)) if cond else [()]
    for z in assignments:
        sub = data.values[(slice(None), slice(None)) + tuple(z)]
        pz = float(to_float(sub).sum())
        if pz < SLICE_MIN_PROB:
            log.info("skipping slice %s=%s with probability %.3g", cond, z, pz)
            notes.append(f"skipped slice {dict(zip(cond, z))}: probability {pz:.3g}")
            continue
        sl = condition_slice(data, z, cond).dist if cond else data
        verdict = corollary1_check(sl, card, config, slice_value=tuple(z))
        rec = verdict.evidence[0]
        records.append(SliceRecord(rec.slice_value, rec.rank_lower, rec.rank_upper, rec.separator_cardinality,
                                   rec.status, pz))
    status = aggregate(records)
    if status is Status.REFUTED:
        bad = [dict(zip(cond, r.slice_value)) for r in records if r.status is Status.REFUTED]
        where = f"on slices {bad}" if cond else f"of P({x},{y})"
        msg = (f"refuted: nonnegative rank {where} exceeds hidden cardinality {card}; "
               f"there must be a direct causal influence between {x} and {y}")
    elif status is Status.CONSISTENT:
        msg = f"consistent: every slice has nonnegative rank <= {card}"
    else:
        msg = "inconclusive: some slice has an uncertified rank interval straddling the cardinality"
    return WitnessVerdict(status, tuple(records), msg, tuple(notes))


def lower_bound_hidden_cardinality(dist, config: Optional[RankConfig] = None) -> int:
    """Smallest cardinality any d-separating hidden variable could have."""
    matrix = dist.matrix() if isinstance(dist, JointDistribution) else np.asarray(dist)
    cfg = config or RankConfig()
    # only the lower bound is reported; skip the factorization search
    cfg = RankConfig(0, cfg.max_iters, cfg.residual_tol, cfg.seed, cfg.exact_lb_max_support, cfg.arith)
    return nonnegative_rank(matrix, cfg).lower


# --- binary perfect-correlation special case ------------------------------


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol


def disjunction_holds(pair: Sequence[float], tol: float) -> bool:
    """Equal magnitude across the two z values, or one of them pinned at -1 or +1."""
    a, b = pair
    return (_close(abs(a), abs(b), tol)
            or _close(min(a, b), -1.0, tol)
            or _close(max(a, b), 1.0, tol))


def perfect_correlation_check(ex_x: Sequence[float], ex_y: Sequence[float],
                              ex_xy: Sequence[float] = (1.0, 1.0), tol: float = 1e-6) -> WitnessVerdict:
    """Binary X, Y, Z with a binary hidden common cause U, given ``<XY|z> = 1`` for both z.

    Pairs are ordered ``(value at z=+1, value at z=-1)``.
    """
    vals = [*ex_x, *ex_y, *ex_xy]
    if len(ex_x) != 2 or len(ex_y) != 2 or len(ex_xy) != 2:
        raise OutOfRange("each expectation argument is a pair (z=+1, z=-1)")
    for v in vals:
        if not -1.0 <= v <= 1.0:
            raise OutOfRange(f"expectation {v} outside [-1, 1]")
    evidence = ({"ex_x": list(ex_x), "ex_y": list(ex_y), "ex_xy": list(ex_xy), "tol": tol},)
    if not all(_close(v, 1.0, tol) for v in ex_xy):
        return WitnessVerdict(Status.INCONCLUSIVE, evidence,
                              "not applicable: <XY|Z=z> is not 1 for both z", ("not-applicable",))
    failures = []
    if not all(_close(a, b, tol) for a, b in zip(ex_x, ex_y)):
        failures.append("<Y|Z=z> differs from <X|Z=z>")
    if not disjunction_holds(ex_x, tol):
        failures.append("<X|Z=z> has unequal magnitudes and neither value is +-1")
    if not disjunction_holds(ex_y, tol):
        failures.append("<Y|Z=z> has unequal magnitudes and neither value is +-1")
    if failures:
        return WitnessVerdict(Status.REFUTED, evidence,
                              "refuted: an additional causal influence between X and Y is needed ("
                              + "; ".join(failures) + ")")
    return WitnessVerdict(Status.CONSISTENT, evidence,
                          "consistent with a common cause U and observed Z alone")


@dataclass(frozen=True, eq=False)
class OracleReport:
    feasible: bool
    target: tuple
    tol: float
    witness: Optional[dict]
    region: np.ndarray = field(repr=False)  # rows: (function index, P(U=+1), <X|z=+1>, <X|z=-1>)

    def to_dict(self) -> dict:
        return {"feasible": self.feasible, "target": list(self.target), "tol": self.tol,
                "witness": self.witness,
                "note": "P(Z) is irrelevant: the constraints are per value of Z"}


def _response_functions():
    # f: (z, u) -> ±1, z and u indexed 0 -> +1, 1 -> -1
    for bits in itertools.product((1, -1), repeat=4):
        yield np.array(bits, dtype=float).reshape(2, 2)


def achievable_region(steps: int = 256) -> np.ndarray:
    """Every ``(<X|z=+1>, <X|z=-1>)`` reached by a deterministic response X = f(Z, U).

    ``P(U=+1)`` runs over the grid ``k/steps``; U is independent of Z.
    """
    q = np.arange(steps + 1) / steps
    rows = []
    for fi, f in enumerate(_response_functions()):
        ez_plus = q * f[0, 0] + (1 - q) * f[0, 1]
        ez_minus = q * f[1, 0] + (1 - q) * f[1, 1]
        rows.append(np.column_stack([np.full_like(q, fi), q, ez_plus, ez_minus]))
    return np.vstack(rows)


def brute_force_response_oracle(target_ex_x: Sequence[float], tol: float = 1 / 128,
                                steps: int = 256) -> OracleReport:
    """Is ``(<X|z=+1>, <X|z=-1>)`` reachable by the hidden-common-cause model?

    Y copies X's response, so only X needs to be enumerated: 16 response
    functions times the grid over ``P(U=+1)``.
    """
    region = achievable_region(steps)
    t = np.asarray(target_ex_x, dtype=float)
    dist = np.max(np.abs(region[:, 2:4] - t), axis=1)
    k = int(np.argmin(dist))
    feasible = bool(dist[k] <= tol)
    witness = None
    if feasible:
        fi = int(region[k, 0])
        f = list(_response_functions())[fi]
        witness = {"function_index": fi, "f": f.tolist(), "p_u_plus": float(region[k, 1]),
                   "achieved": [float(region[k, 2]), float(region[k, 3])]}
    return OracleReport(feasible, tuple(float(v) for v in t), tol, witness, region)
