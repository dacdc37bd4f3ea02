"""Causal DAGs with observed/hidden variables of declared cardinality, and d-separation."""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import CycleDetected, DuplicateName, InvalidPath, InvalidQuery, UnknownVariable


@dataclass(frozen=True)
class VariableSpec:
    name: str
    cardinality: int
    observed: bool = True

    def __post_init__(self):
        if not isinstance(self.cardinality, (int, np.integer)) or self.cardinality < 1:
            raise ValueError(f"variable {self.name!r}: cardinality must be a positive integer")


@dataclass(frozen=True)
class SeparationQuery:
    x_set: frozenset
    y_set: frozenset
    z_set: frozenset = frozenset()

    @classmethod
    def of(cls, x, y, z=()) -> "SeparationQuery":
        return cls(_as_set(x), _as_set(y), _as_set(z))


def _as_set(v) -> frozenset:
    if isinstance(v, str):
        return frozenset([v])
    return frozenset(v)


@dataclass(frozen=True)
class CausalGraph:
    """Immutable DAG. Build through :func:`build_graph`, which validates."""

    variables: tuple
    edges: frozenset
    _parents: Mapping = field(repr=False, compare=False)
    _children: Mapping = field(repr=False, compare=False)
    _order: tuple = field(repr=False, compare=False)

    @property
    def names(self) -> tuple:
        return tuple(v.name for v in self.variables)

    def spec(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownVariable(f"unknown variable {name!r}")

    def parents(self, name: str) -> tuple:
        self._check(name)
        return self._parents[name]

    def children(self, name: str) -> tuple:
        self._check(name)
        return self._children[name]

    def topological_order(self) -> tuple:
        return self._order

    def descendants(self, name: str) -> frozenset:
        """Strict descendants of ``name``."""
        seen = set()
        stack = list(self.children(name))
        while stack:
            v = stack.pop()
            if v not in seen:
                seen.add(v)
                stack.extend(self._children[v])
        return frozenset(seen)

    def ancestors(self, names: Iterable[str]) -> frozenset:
        """``names`` together with all their ancestors."""
        seen = set()
        stack = list(names)
        while stack:
            v = stack.pop()
            self._check(v)
            if v not in seen:
                seen.add(v)
                stack.extend(self._parents[v])
        return frozenset(seen)

    def adjacent(self, a: str, b: str) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    @property
    def hidden(self) -> tuple:
        return tuple(v.name for v in self.variables if not v.observed)

    @property
    def observed(self) -> tuple:
        return tuple(v.name for v in self.variables if v.observed)

    def _check(self, name):
        if name not in self._parents:
            raise UnknownVariable(f"unknown variable {name!r}")


def build_graph(variables: Sequence, edges: Iterable) -> CausalGraph:
    specs = []
    for v in variables:
        if isinstance(v, VariableSpec):
            specs.append(v)
        elif isinstance(v, Mapping):
            specs.append(VariableSpec(v["name"], int(v["cardinality"]), bool(v.get("observed", True))))
        else:
            specs.append(VariableSpec(*v))
    names = [v.name for v in specs]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise DuplicateName(f"duplicate variable names: {dupes}")
    known = set(names)
    edge_set = set()
    for e in edges:
        a, b = e
        for end in (a, b):
            if end not in known:
                raise UnknownVariable(f"edge {a}->{b} references undeclared variable {end!r}")
        if a == b:
            raise CycleDetected(f"self-loop on {a!r}")
        edge_set.add((a, b))

    parents = {n: [] for n in names}
    children = {n: [] for n in names}
    for a, b in sorted(edge_set, key=lambda e: (names.index(e[0]), names.index(e[1]))):
        parents[b].append(a)
        children[a].append(b)

    # Kahn's algorithm; ties broken by declaration order
    indeg = {n: len(parents[n]) for n in names}
    ready = deque(n for n in names if indeg[n] == 0)
    order = []
    while ready:
        v = ready.popleft()
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(order) != len(names):
        stuck = sorted(n for n in names if indeg[n] > 0)
        raise CycleDetected(f"directed cycle among {stuck}")

    return CausalGraph(
        variables=tuple(specs),
        edges=frozenset(edge_set),
        _parents={n: tuple(p) for n, p in parents.items()},
        _children={n: tuple(c) for n, c in children.items()},
        _order=tuple(order),
    )


def _validate_query(graph: CausalGraph, query: SeparationQuery) -> None:
    for s in (query.x_set, query.y_set, query.z_set):
        for v in s:
            graph._check(v)
    if (query.x_set & query.y_set) or (query.x_set & query.z_set) or (query.y_set & query.z_set):
        raise InvalidQuery("x_set, y_set and z_set must be pairwise disjoint")
    if not query.x_set or not query.y_set:
        raise InvalidQuery("x_set and y_set must be nonempty")


def path_is_blocked(graph: CausalGraph, path: Sequence[str], z_set: Iterable[str]) -> bool:
    """Whether ``z_set`` blocks the (undirected-sense) ``path``.

    A triple a-b-c is a collider when both edges point into b. A non-collider
    blocks when b is conditioned on; a collider blocks when neither b nor any
    descendant of b is conditioned on.
    """
    z = _as_set(z_set)
    for v in path:
        graph._check(v)
    for a, b in zip(path, path[1:]):
        if not graph.adjacent(a, b):
            raise InvalidPath(f"{a!r} and {b!r} are not adjacent")
    for a, b, c in zip(path, path[1:], path[2:]):
        collider = (a, b) in graph.edges and (c, b) in graph.edges
        if collider:
            if b not in z and not (graph.descendants(b) & z):
                return True
        elif b in z:
            return True
    return False


def iter_paths(graph: CausalGraph, source: str, target: str) -> Iterator[tuple]:
    """All simple paths between two vertices of the skeleton."""
    neighbours = {n: sorted(set(graph._parents[n]) | set(graph._children[n])) for n in graph.names}

    def walk(path, seen):
        tail = path[-1]
        if tail == target:
            yield tuple(path)
            return
        for nxt in neighbours[tail]:
            if nxt not in seen:
                seen.add(nxt)
                path.append(nxt)
                yield from walk(path, seen)
                path.pop()
                seen.discard(nxt)

    graph._check(source)
    graph._check(target)
    yield from walk([source], {source})


def d_separated_by_paths(graph: CausalGraph, query: SeparationQuery) -> bool:
    """d-separation by enumerating every path. Exponential; for checking only."""
    _validate_query(graph, query)
    for x in query.x_set:
        for y in query.y_set:
            for p in iter_paths(graph, x, y):
                if not path_is_blocked(graph, p, query.z_set):
                    return False
    return True


def d_separated(graph: CausalGraph, query: SeparationQuery) -> bool:
    """Decide ``x_set ⟂ y_set | z_set`` by reachability over (vertex, direction) states."""
    _validate_query(graph, query)
    z = query.z_set
    anc_z = graph.ancestors(z)
    # state: (vertex, arrived_from_child). arrived_from_child=True means the walk
    # entered the vertex against an edge (v <- prev), i.e. moving up.
    start = [(x, True) for x in query.x_set]
    seen = set()
    queue = deque(start)
    while queue:
        v, up = queue.popleft()
        if (v, up) in seen:
            continue
        seen.add((v, up))
        if v in query.y_set:
            return False
        if up:
            if v in z:
                continue
            for p in graph._parents[v]:
                queue.append((p, True))
            for c in graph._children[v]:
                queue.append((c, False))
        else:
            if v not in z:
                for c in graph._children[v]:
                    queue.append((c, False))
            if v in anc_z:
                for p in graph._parents[v]:
                    queue.append((p, True))
    return True


def separator_cardinality(graph: CausalGraph, z_set: Iterable[str]) -> int:
    return math.prod(graph.spec(v).cardinality for v in _as_set(z_set))


def find_hidden_separators(
    graph: CausalGraph, x: str, y: str, conditioned: Iterable[str] = ()
) -> list:
    """Inclusion-minimal hidden sets ``S`` with ``x ⟂ y | S ∪ conditioned``.

    Returns ``[(S, |S|), ...]`` where the cardinality counts the hidden members
    only; the conditioned (observed) variables are handled by slicing.
    """
    cond = _as_set(conditioned)
    if x == y:
        raise InvalidQuery("x and y must differ")
    for v in cond:
        if not graph.spec(v).observed:
            raise InvalidQuery(f"conditioned variable {v!r} is hidden")
    if graph.adjacent(x, y):
        return []
    pool = [h for h in graph.hidden if h not in cond and h not in (x, y)]
    found: list = []
    for size in range(len(pool) + 1):
        for combo in itertools.combinations(pool, size):
            s = frozenset(combo)
            if any(prev <= s for prev, _ in found):
                continue
            if d_separated(graph, SeparationQuery(frozenset([x]), frozenset([y]), s | cond)):
                found.append((s, separator_cardinality(graph, s)))
    return found


# --- Markov factorization -------------------------------------------------


def random_cpts(graph: CausalGraph, rng: np.random.Generator, exact: bool = False,
                max_weight: int = 6) -> dict:
    """Random conditional tables ``P(v | parents)``.

    Each table has shape ``(*parent_cards, card_v)``. With ``exact`` the
    entries are Fractions built from integer weights in ``[1, max_weight]``.
    """
    cpts = {}
    for v in graph.variables:
        pcards = [graph.spec(p).cardinality for p in graph.parents(v.name)]
        shape = (*pcards, v.cardinality)
        if exact:
            w = rng.integers(1, max_weight + 1, size=shape)
            table = np.empty(shape, dtype=object)
            for idx in np.ndindex(*pcards):
                row = w[idx]
                tot = int(row.sum())
                for k in range(v.cardinality):
                    table[idx + (k,)] = Fraction(int(row[k]), tot)
        else:
            table = rng.dirichlet(np.ones(v.cardinality), size=tuple(pcards) or None)
            table = np.asarray(table, dtype=float).reshape(shape)
        cpts[v.name] = table
    return cpts


def markov_joint(graph: CausalGraph, cpts: Mapping[str, np.ndarray]) -> np.ndarray:
    """Joint table ``Π_v P(v | pa(v))`` with one axis per variable in declaration order."""
    names = graph.names
    cards = [v.cardinality for v in graph.variables]
    exact = any(np.asarray(t).dtype == object for t in cpts.values())
    out = np.empty(cards, dtype=object if exact else float)
    for idx in np.ndindex(*cards):
        val = Fraction(1) if exact else 1.0
        assign = dict(zip(names, idx))
        for n in names:
            key = tuple(assign[p] for p in graph.parents(n)) + (assign[n],)
            val = val * cpts[n][key]
        out[idx] = val
    return out


# --- serialization --------------------------------------------------------


def graph_to_dict(graph: CausalGraph) -> dict:
    return {
        "variables": [
            {"name": v.name, "cardinality": int(v.cardinality), "observed": v.observed}
            for v in graph.variables
        ],
        "edges": [list(e) for e in sorted(graph.edges, key=lambda e: (graph.names.index(e[0]), graph.names.index(e[1])))],
    }


def graph_from_dict(data: Mapping) -> CausalGraph:
    return build_graph(data["variables"], [tuple(e) for e in data.get("edges", [])])


def to_dot(graph: CausalGraph) -> str:
    lines = ["digraph G {"]
    for v in graph.variables:
        style = "solid" if v.observed else "dashed"
        lines.append(f'  "{v.name}" [shape=ellipse, style={style}, label="{v.name} ({v.cardinality})"];')
    for a, b in sorted(graph.edges):
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
