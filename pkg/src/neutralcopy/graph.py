"""Two-type planted-partition graphs and their mixing statistics."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np

from neutralcopy.errors import ConnectivityError, InvalidParameterError, UndefinedMixingError
from neutralcopy.rng import check_seed, stream

TypeAssignment = Literal["exact-half-split", "uniform-random-equiprobable"]
ConnectivityPolicy = Literal["resample-until-connected", "allow-disconnected"]

TYPE_ASSIGNMENTS = ("exact-half-split", "uniform-random-equiprobable")
CONNECTIVITY_POLICIES = ("resample-until-connected", "allow-disconnected")


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on nodes ``0..n-1``.

    ``edges`` is a sorted tuple of ``(u, v)`` pairs with ``u < v``; the
    constructor normalises and validates whatever it is given.
    """

    n: int
    edges: tuple[tuple[int, int], ...] = ()
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = int(self.n)
        if n < 0:
            raise InvalidParameterError(f"node count must be non-negative, got {n}")
        seen = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise InvalidParameterError(f"self-loop on node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidParameterError(f"edge ({u}, {v}) out of range for n={n}")
            pair = (u, v) if u < v else (v, u)
            if pair in seen:
                raise InvalidParameterError(f"duplicate edge {pair}")
            seen.add(pair)
        edges = tuple(sorted(seen))
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(a)) for a in nbrs))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.array([len(a) for a in self.adjacency], dtype=np.int64)
        deg.setflags(write=False)
        return deg

    def adjacency_matrix(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        if self.edges:
            e = np.asarray(self.edges)
            A[e[:, 0], e[:, 1]] = 1.0
            A[e[:, 1], e[:, 0]] = 1.0
        return A

    def is_connected(self) -> bool:
        return len(connected_components(self)) <= 1


@dataclass(frozen=True)
class GeneratorParams:
    n: int
    p_within: float
    p_between: float
    type_assignment: TypeAssignment = "exact-half-split"
    seed: int = 0
    connectivity_policy: ConnectivityPolicy = "resample-until-connected"
    max_attempts: int = 1000

    def validate(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise InvalidParameterError(f"n must be an integer >= 2, got {self.n}")
        for name in ("p_within", "p_between"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {p}")
        if self.type_assignment not in TYPE_ASSIGNMENTS:
            raise InvalidParameterError(f"unknown type_assignment {self.type_assignment!r}")
        if self.connectivity_policy not in CONNECTIVITY_POLICIES:
            raise InvalidParameterError(f"unknown connectivity_policy {self.connectivity_policy!r}")
        if self.connectivity_policy == "resample-until-connected" and self.max_attempts < 1:
            raise InvalidParameterError(f"max_attempts must be >= 1, got {self.max_attempts}")
        check_seed(self.seed)


@dataclass(frozen=True)
class MixingSummary:
    """Edge-end mixing between the two social types.

    ``r`` is NaN and ``defined`` is False when every edge end falls in one
    class, since the assortativity denominator ``1 - sum(a**2)`` vanishes.
    """

    e: np.ndarray
    a: np.ndarray
    r: float
    defined: bool


def frozen_types(types: Sequence[int] | np.ndarray) -> np.ndarray:
    """Validate a 0/1 social type vector and return a read-only int8 copy."""
    t = np.array(types, dtype=np.int64)
    if t.ndim != 1 or not np.all((t == 0) | (t == 1)):
        raise InvalidParameterError("social types must be a 1-d vector of 0/1 labels")
    out = t.astype(np.int8)
    out.setflags(write=False)
    return out


def _draw_types(params: GeneratorParams, rng: np.random.Generator) -> np.ndarray:
    n = params.n
    if params.type_assignment == "exact-half-split":
        base = np.zeros(n, dtype=np.int8)
        base[n // 2:] = 1
        return rng.permutation(base)
    return rng.integers(0, 2, size=n).astype(np.int8)


def _draw_edges(types: np.ndarray, p_within: float, p_between: float,
                rng: np.random.Generator) -> list[tuple[int, int]]:
    n = len(types)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(types[iu] == types[ju], p_within, p_between)
    keep = rng.random(iu.size) < prob
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))


def generate_planted_partition(params: GeneratorParams) -> tuple[Graph, np.ndarray]:
    """Draw a two-type planted-partition graph.

    Each unordered pair is an edge independently with probability
    ``p_within`` (same type) or ``p_between`` (different types). Types are
    drawn once; under ``resample-until-connected`` only the edges are redrawn.

    Raises
    ------
    InvalidParameterError
        If ``params`` fails validation.
    ConnectivityError
        If no connected graph appears within ``max_attempts`` draws.
    """
    params.validate()
    rng = stream(params.seed)
    types = _draw_types(params, rng)
    attempts = params.max_attempts if params.connectivity_policy == "resample-until-connected" else 1
    for _ in range(attempts):
        g = Graph(params.n, _draw_edges(types, params.p_within, params.p_between, rng))
        if params.connectivity_policy == "allow-disconnected" or g.is_connected():
            return g, frozen_types(types)
    raise ConnectivityError(
        f"no connected graph in max_attempts={params.max_attempts} draws "
        f"(n={params.n}, p_within={params.p_within}, p_between={params.p_between})"
    )


def mixing_summary(g: Graph, types: Sequence[int] | np.ndarray) -> MixingSummary:
    """Mixing matrix and assortativity coefficient of ``types`` over ``g``.

    Each undirected edge contributes one edge end in each direction, so
    ``e`` is symmetric and sums to one.
    """
    t = np.asarray(types)
    if len(t) != g.n:
        raise InvalidParameterError(f"type vector length {len(t)} != n={g.n}")
    if g.m == 0:
        raise UndefinedMixingError("mixing is undefined on a graph with no edges")
    counts = np.zeros((2, 2), dtype=np.int64)
    e_arr = np.asarray(g.edges)
    tu, tv = t[e_arr[:, 0]], t[e_arr[:, 1]]
    np.add.at(counts, (tu, tv), 1)
    np.add.at(counts, (tv, tu), 1)
    e = counts / (2.0 * g.m)
    a = e.sum(axis=1)
    # Degenerate exactly when one class owns every edge end.
    if counts[0].sum() == 0 or counts[1].sum() == 0:
        return MixingSummary(e, a, float("nan"), False)
    sa2 = float(np.sum(a * a))
    r = (float(np.trace(e)) - sa2) / (1.0 - sa2)
    return MixingSummary(e, a, r, True)


def connected_components(g: Graph) -> list[frozenset[int]]:
    """Connected components, ordered by their smallest node id."""
    seen = [False] * g.n
    comps = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        comp = [s]
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in g.adjacency[u]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        comps.append(frozenset(comp))
    return comps


def component_labels(g: Graph) -> np.ndarray:
    labels = np.empty(g.n, dtype=np.int64)
    for i, comp in enumerate(connected_components(g)):
        labels[list(comp)] = i
    return labels


def complete_graph(n: int) -> Graph:
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])

