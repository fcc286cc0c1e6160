"""Voter-model copying of a binary cultural trait on a fixed graph.

One elementary step: pick a node uniformly, pick one of its neighbours
uniformly, copy the neighbour's trait. Biased copying additionally accepts
the copied value with probability ``beta[type][incoming trait]``.

Random draws per step are fixed so that ``run`` reproduces a sequence of
single-step calls on the same generator exactly: a neutral step consumes two
uniforms (node, neighbour), a biased step three (node, neighbour, accept).
A neighbourless node still consumes its draws and the step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from neutralcopy.errors import InvalidParameterError, StateSpaceTooLargeError
from neutralcopy.graph import Graph, component_labels
from neutralcopy.stats import chi2_2x2

EXACT_MAX_NODES = 14


@dataclass(frozen=True)
class BiasMatrix:
    """``beta[t][y]``: probability a type-``t`` node accepts a copied trait ``y``."""

    beta: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 1.0), (1.0, 1.0))

    def __post_init__(self) -> None:
        b = np.asarray(self.beta, dtype=float)
        if b.shape != (2, 2):
            raise InvalidParameterError(f"bias matrix must be 2x2, got shape {b.shape}")
        if not np.all((b > 0.0) & (b <= 1.0)):
            raise InvalidParameterError(f"bias entries must lie in (0, 1], got {b.tolist()}")
        object.__setattr__(self, "beta", tuple(tuple(float(x) for x in row) for row in b))

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "BiasMatrix":
        b00, b01, b10, b11 = values
        return cls(((b00, b01), (b10, b11)))

    def as_array(self) -> np.ndarray:
        return np.array(self.beta)


Stepper = Union[None, str, BiasMatrix]


def _bias_of(stepper: Stepper) -> BiasMatrix | None:
    if stepper is None or stepper == "neutral":
        return None
    if isinstance(stepper, BiasMatrix):
        return stepper
    raise InvalidParameterError(f"stepper must be 'neutral' or a BiasMatrix, got {stepper!r}")


@dataclass(frozen=True)
class StepClock:
    steps: int
    n: int

    @property
    def sweeps(self) -> float:
        return self.steps / self.n

    def advance(self, k: int = 1) -> "StepClock":
        return StepClock(self.steps + k, self.n)


@dataclass
class TrajectoryRecord:
    """Samples of a single run.

    ``tables[k]`` is ``[[n00, n01], [n10, n11]]`` (type x trait) at
    ``steps[k]``. ``states`` is only filled when the run was asked to keep
    snapshots.
    """

    n: int
    steps: np.ndarray
    chi2: np.ndarray
    tables: np.ndarray
    absorbed: np.ndarray
    final_state: np.ndarray
    final_step: int
    states: np.ndarray | None = field(default=None, repr=False)

    @property
    def sweeps(self) -> np.ndarray:
        return self.steps / self.n

    @property
    def absorption_step(self) -> int | None:
        hit = np.flatnonzero(self.absorbed)
        return int(self.steps[hit[0]]) if hit.size else None

    def __len__(self) -> int:
        return len(self.steps)


def _check_traits(traits, n: int) -> np.ndarray:
    s = np.asarray(traits)
    if s.shape != (n,):
        raise InvalidParameterError(f"trait vector has shape {s.shape}, expected ({n},)")
    if not np.all((s == 0) | (s == 1)):
        raise InvalidParameterError("traits must be 0/1")
    return s.astype(np.int8)


def init_uniform_traits(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    return rng.integers(0, 2, size=n).astype(np.int8)


def _apply(g: Graph, state: np.ndarray, u: np.ndarray, types, bias: BiasMatrix | None) -> np.ndarray:
    new = state.copy()
    i = int(u[0] * g.n)
    nbrs = g.adjacency[i]
    if not nbrs:
        return new
    incoming = state[nbrs[int(u[1] * len(nbrs))]]
    if bias is not None and not u[2] < bias.beta[types[i]][incoming]:
        return new
    new[i] = incoming
    return new


def neutral_step(g: Graph, state, rng: np.random.Generator,
                 clock: StepClock | None = None) -> tuple[np.ndarray, StepClock]:
    """One neutral copy attempt. Returns a new state and the advanced clock."""
    s = _check_traits(state, g.n)
    clock = clock or StepClock(0, g.n)
    return _apply(g, s, rng.random(2), None, None), clock.advance()


def biased_step(g: Graph, state, types, bias: BiasMatrix, rng: np.random.Generator,
                clock: StepClock | None = None) -> tuple[np.ndarray, StepClock]:
    """One copy attempt filtered by ``bias``; the clock advances even if rejected."""
    s = _check_traits(state, g.n)
    t = np.asarray(types)
    clock = clock or StepClock(0, g.n)
    return _apply(g, s, rng.random(3), t, bias), clock.advance()


def is_absorbed(state, g: Graph) -> bool:
    """True iff every connected component is trait-homogeneous."""
    s = np.asarray(state)
    for u, v in g.edges:
        if s[u] != s[v]:
            return False
    return True


def _table(types: np.ndarray, traits: np.ndarray) -> list[int]:
    return np.bincount(2 * types.astype(np.int64) + traits, minlength=4).tolist()


def run(g: Graph, types, s0, stepper: Stepper, budget: int, record_every: int,
        rng: np.random.Generator, early_stop: bool = True, keep_states: bool = False,
        chunk: int = 8192) -> TrajectoryRecord:
    """Apply up to ``budget`` steps, sampling at step 0 and every ``record_every`` steps.

    With ``early_stop`` the run ends at the first absorbed state, which is
    recorded even when it falls between scheduled samples.
    """
    if budget < 1:
        raise InvalidParameterError(f"budget must be >= 1, got {budget}")
    if record_every < 1:
        raise InvalidParameterError(f"record_every must be >= 1, got {record_every}")
    bias = _bias_of(stepper)
    n = g.n
    t_arr = np.asarray(types, dtype=np.int64)
    if t_arr.shape != (n,):
        raise InvalidParameterError("type vector length does not match graph")
    traits = _check_traits(s0, n).astype(np.int64)

    tr = traits.tolist()
    ty = t_arr.tolist()
    adj = g.adjacency
    beta = bias.beta if bias is not None else None
    width = 3 if bias is not None else 2

    # Absorption bookkeeping: number of edges whose endpoints disagree.
    discordant = sum(1 for u, v in g.edges if tr[u] != tr[v])
    cnt = _table(t_arr, traits)  # n00, n01, n10, n11

    steps_out, chi_out, tab_out, abs_out, states_out = [], [], [], [], []

    def record(step: int) -> None:
        steps_out.append(step)
        chi_out.append(chi2_2x2(*cnt))
        tab_out.append(list(cnt))
        abs_out.append(discordant == 0)
        if keep_states:
            states_out.append(list(tr))

    record(0)
    step = 0
    done = early_stop and discordant == 0
    while not done and step < budget:
        todo = min(chunk, budget - step)
        draws = rng.random((todo, width)).tolist()
        for u in draws:
            step += 1
            i = int(u[0] * n)
            nb = adj[i]
            if nb:
                new = tr[nb[int(u[1] * len(nb))]]
                old = tr[i]
                if new != old and (beta is None or u[2] < beta[ty[i]][new]):
                    tr[i] = new
                    for j in nb:
                        discordant += 1 if tr[j] != new else -1
                    k = 2 * ty[i]
                    cnt[k + old] -= 1
                    cnt[k + new] += 1
            if discordant == 0 and early_stop:
                record(step)
                done = True
                break
            if step % record_every == 0:
                record(step)

    return TrajectoryRecord(
        n=n,
        steps=np.array(steps_out, dtype=np.int64),
        chi2=np.array(chi_out, dtype=float),
        tables=np.array(tab_out, dtype=np.int64).reshape(-1, 2, 2),
        absorbed=np.array(abs_out, dtype=bool),
        final_state=np.array(tr, dtype=np.int8),
        final_step=step,
        states=np.array(states_out, dtype=np.int8) if keep_states else None,
    )


def transition_matrix(g: Graph, types, stepper: Stepper) -> sparse.csr_matrix:
    """One-step transition matrix over the ``2**n`` trait configurations.

    Configuration ``x`` has node ``i``'s trait in bit ``i``.
    """
    n = g.n
    if n > EXACT_MAX_NODES:
        raise StateSpaceTooLargeError(f"n={n} exceeds the exact-solve cap of {EXACT_MAX_NODES} nodes")
    bias = _bias_of(stepper)
    t = np.zeros(n, dtype=np.int64) if types is None else np.asarray(types, dtype=np.int64)
    N = 1 << n
    x = np.arange(N, dtype=np.int64)
    bits = (x[:, None] >> np.arange(n)) & 1
    rows, cols, vals = [], [], []
    stay = np.ones(N)
    for i in range(n):
        nbrs = list(g.adjacency[i])
        if not nbrs:
            continue
        opp = (bits[:, nbrs] != bits[:, [i]]).sum(axis=1) / len(nbrs)
        p = opp / n
        if bias is not None:
            target = 1 - bits[:, i]
            p = p * np.array(bias.beta[t[i]])[target]
        nz = np.flatnonzero(p)
        rows.append(nz)
        cols.append(nz ^ (1 << i))
        vals.append(p[nz])
        stay -= p
    rows.append(x)
    cols.append(x)
    vals.append(stay)
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )


class AbsorptionResult(NamedTuple):
    p_all_one: float
    expected_steps: float


def encode_state(traits) -> int:
    return int(sum(int(b) << i for i, b in enumerate(traits)))


def exact_absorption_oracle(g: Graph, types, s0, stepper: Stepper = "neutral") -> AbsorptionResult:
    """Exact all-ones absorption probability and mean absorption time (steps).

    Solves the absorbing chain over all ``2**n`` configurations; refuses
    graphs with more than ``EXACT_MAX_NODES`` nodes.
    """
    P = transition_matrix(g, types, stepper)
    n = g.n
    start = encode_state(_check_traits(s0, n))
    all_one = (1 << n) - 1
    absorbing = np.isclose(P.diagonal(), 1.0, rtol=0, atol=0)
    if absorbing[start]:
        return AbsorptionResult(1.0 if start == all_one else 0.0, 0.0)
    transient = np.flatnonzero(~absorbing)
    pos = np.full(1 << n, -1)
    pos[transient] = np.arange(transient.size)
    Q = P[transient][:, transient]
    A = (sparse.identity(transient.size, format="csc") - Q).tocsc()
    to_one = np.asarray(P[transient][:, [all_one]].todense()).ravel()
    lu = splinalg.splu(A)
    h = lu.solve(to_one)
    tau = lu.solve(np.ones(transient.size))
    k = pos[start]
    return AbsorptionResult(float(h[k]), float(tau[k]))


class MonteCarloAbsorption(NamedTuple):
    all_one: int
    absorbed: int
    runs: int
    mean_steps: float


def absorption_monte_carlo(g: Graph, types, s0, stepper: Stepper, runs: int,
                           rng: np.random.Generator, max_steps: int = 10**7) -> MonteCarloAbsorption:
    """Simulate ``runs`` independent chains from ``s0`` until absorption.

    Vectorised across runs; independent of the transition-matrix route.
    """
    bias = _bias_of(stepper)
    n = g.n
    t = np.zeros(n, dtype=np.int64) if types is None else np.asarray(types, dtype=np.int64)
    s = _check_traits(s0, n)
    deg = np.asarray(g.degrees)
    indptr = np.concatenate([[0], np.cumsum(deg)])
    flat = np.array([j for a in g.adjacency for j in a], dtype=np.int64)
    labels = component_labels(g)
    n_comp = labels.max() + 1
    comp_size = np.bincount(labels, minlength=n_comp)
    beta = bias.as_array() if bias is not None else None

    state = np.tile(s.astype(np.int64), (runs, 1))
    ones = np.zeros((runs, n_comp), dtype=np.int64)
    np.add.at(ones, (slice(None), labels), state)

    def settled(o: np.ndarray) -> np.ndarray:
        return np.all((o == 0) | (o == comp_size), axis=1)

    active = np.flatnonzero(~settled(ones))
    steps = np.zeros(runs, dtype=np.int64)
    elapsed = 0
    while active.size and elapsed < max_steps:
        elapsed += 1
        steps[active] += 1
        m = active.size
        i = (rng.random(m) * n).astype(np.int64)
        d = deg[i]
        has = d > 0
        j = flat[np.minimum(indptr[i] + (rng.random(m) * d).astype(np.int64), flat.size - 1)] if flat.size else i
        incoming = state[active, j]
        change = has & (incoming != state[active, i])
        if beta is not None:
            change &= rng.random(m) < beta[t[i], incoming]
        r = active[change]
        if r.size:
            ii = i[change]
            new = incoming[change]
            state[r, ii] = new
            ones[r, labels[ii]] += 2 * new - 1
            active = active[~settled(ones[active])]
    full = state.sum(axis=1) == n
    done = settled(ones)
    return MonteCarloAbsorption(int(np.count_nonzero(full & done)), int(np.count_nonzero(done)),
                                runs, float(steps[done].mean()) if done.any() else float("nan"))
