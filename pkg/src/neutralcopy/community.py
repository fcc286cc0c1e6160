"""Girvan-Newman community detection.

Edge betweenness uses the Brandes dependency accumulation, run for all
sources at once as dense matrix products: row ``s`` of the level-``k``
matrix holds the number of shortest paths from ``s`` to each node at
distance ``k``. This is fast for the few-hundred-node graphs simulated here.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from neutralcopy.errors import InvalidParameterError, UndefinedMixingError
from neutralcopy.graph import Graph, connected_components

# Betweenness values within this relative distance of the maximum count as tied.
TIE_RTOL = 1e-10
# Modularity improvements smaller than this do not displace an earlier cut.
Q_ATOL = 1e-12


@dataclass(frozen=True)
class Partition:
    """Disjoint, covering blocks ordered by smallest member."""

    blocks: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        blocks = [frozenset(int(v) for v in b) for b in self.blocks]
        if any(not b for b in blocks):
            raise InvalidParameterError("partition blocks must be non-empty")
        blocks.sort(key=min)
        object.__setattr__(self, "blocks", tuple(blocks))
        seen = set()
        for b in blocks:
            if seen & b:
                raise InvalidParameterError("partition blocks overlap")
            seen |= b
        if seen != set(range(len(seen))):
            raise InvalidParameterError("partition must cover nodes 0..n-1")

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        groups: dict[int, set[int]] = {}
        for node, lab in enumerate(labels):
            groups.setdefault(int(lab), set()).add(node)
        return cls(tuple(groups.values()))

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def labels(self) -> np.ndarray:
        """Block id per node; ids are dense from 0 in block order."""
        out = np.empty(self.n, dtype=np.int64)
        for k, b in enumerate(self.blocks):
            out[list(b)] = k
        return out

    def __len__(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True)
class Removal:
    edge: tuple[int, int]
    betweenness: float
    components: int


@dataclass
class Dendrogram:
    """Edge-removal history and the distinct component partitions it passed through."""

    removals: list[Removal] = field(default_factory=list)
    partitions: list[Partition] = field(default_factory=list)
    modularities: list[float] = field(default_factory=list)


def _betweenness_matrix(A: np.ndarray) -> np.ndarray:
    """Symmetric matrix of edge betweenness for 0/1 adjacency ``A``."""
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    frontier = np.eye(n)
    visited = np.eye(n, dtype=bool)
    levels = [frontier]
    while True:
        nxt = frontier @ A
        nxt[visited] = 0.0
        reached = nxt > 0
        if not reached.any():
            break
        visited |= reached
        levels.append(nxt)
        frontier = nxt
    B = np.zeros((n, n))
    delta = np.zeros((n, n))
    for k in range(len(levels) - 1, 0, -1):
        sig = levels[k]
        on = sig > 0
        coef = np.zeros((n, n))
        coef[on] = (1.0 + delta[on]) / sig[on]
        prev = levels[k - 1]
        B += (prev.T @ coef) * A
        delta = prev * (coef @ A)
    # Every unordered pair was walked once from each end.
    return (B + B.T) / 2.0


def edge_betweenness(g: Graph) -> dict[tuple[int, int], float]:
    """Betweenness of every edge, keyed by ``(u, v)`` with ``u < v``."""
    if g.m == 0:
        return {}
    B = _betweenness_matrix(g.adjacency_matrix())
    return {(u, v): float(B[u, v]) for u, v in g.edges}


def _labels(blocks: Iterable[Iterable[int]], n: int) -> np.ndarray:
    lab = np.full(n, -1, dtype=np.int64)
    for k, b in enumerate(blocks):
        lab[list(b)] = k
    if np.any(lab < 0):
        raise InvalidParameterError("partition does not cover every node")
    return lab


def modularity(g: Graph, partition: Partition | Sequence[Iterable[int]]) -> float:
    """Newman modularity of ``partition`` on ``g``."""
    if g.m == 0:
        raise UndefinedMixingError("modularity is undefined on a graph with no edges")
    blocks = partition.blocks if isinstance(partition, Partition) else partition
    lab = _labels(blocks, g.n)
    k = lab.max() + 1
    e = np.asarray(g.edges)
    same = lab[e[:, 0]] == lab[e[:, 1]]
    within = np.bincount(lab[e[same, 0]], minlength=k)
    deg_sum = np.bincount(lab, weights=np.asarray(g.degrees, dtype=float), minlength=k)
    m = g.m
    return float(np.sum(within / m - (deg_sum / (2.0 * m)) ** 2))


def _component_of(adj: list[set[int]], start: int) -> list[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return sorted(seen)


def girvan_newman(g: Graph) -> tuple[Dendrogram, Partition]:
    """Remove highest-betweenness edges until none remain; keep the best cut.

    Betweenness is recomputed after every removal (only inside the component
    that lost the edge, since other components are unaffected). Ties go to
    the lexicographically smallest edge. Among the component partitions seen
    along the way, the one with the highest modularity on ``g`` is returned,
    the earliest (fewest blocks) on ties.
    """
    dendro = Dendrogram()
    comps = connected_components(g)
    current = Partition(tuple(comps))
    dendro.partitions.append(current)
    if g.m == 0:
        dendro.modularities.append(float("nan"))
        return dendro, current

    best_q = modularity(g, current)
    dendro.modularities.append(best_q)
    best = current

    A = g.adjacency_matrix()
    adj = [set(a) for a in g.adjacency]
    B = _betweenness_matrix(A)
    iu, ju = np.triu_indices(g.n, k=1)
    n_comp = len(comps)

    for _ in range(g.m):
        live = A[iu, ju] > 0
        vals = np.where(live, B[iu, ju], -np.inf)
        top = vals.max()
        # triu order is lexicographic, so argmax of the tie mask is the smallest edge.
        pick = int(np.argmax(live & (vals >= top - TIE_RTOL * max(1.0, top))))
        u, v = int(iu[pick]), int(ju[pick])
        A[u, v] = A[v, u] = 0.0
        B[u, v] = B[v, u] = 0.0
        adj[u].discard(v)
        adj[v].discard(u)

        side_u = _component_of(adj, u)
        split = v not in side_u
        touched = [side_u, _component_of(adj, v)] if split else [side_u]
        for nodes in touched:
            ix = np.ix_(nodes, nodes)
            B[ix] = _betweenness_matrix(A[ix])
        if split:
            n_comp += 1
        dendro.removals.append(Removal((u, v), float(top), n_comp))

        if split:
            parts = [b for b in current.blocks if u not in b]
            parts.extend(frozenset(nodes) for nodes in touched)
            current = Partition(tuple(parts))
            q = modularity(g, current)
            dendro.partitions.append(current)
            dendro.modularities.append(q)
            if q > best_q + Q_ATOL:
                best_q, best = q, current
    return dendro, best
