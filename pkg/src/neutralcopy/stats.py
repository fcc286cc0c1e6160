"""Social type x cultural trait association tests.

All tables here are 2x2: rows are social type, columns are cultural trait.
The chi-squared statistic is the raw Pearson statistic with no continuity
correction. A table with an empty row or column is *degenerate*: its
statistic is 0 with 0 degrees of freedom, never an error, so that late,
nearly homogeneous stages of a run still produce a value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import special

from neutralcopy.errors import InvalidParameterError
from neutralcopy.rng import check_seed, stream

# Relative slack when counting permuted statistics that tie the observed one.
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.counts, dtype=np.int64).reshape(2, 2)
        if np.any(c < 0):
            raise InvalidParameterError("contingency counts must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def as_list(self) -> list[list[int]]:
        return self.counts.tolist()


@dataclass(frozen=True)
class ChiSquaredResult:
    """``p_asymptotic`` is NaN exactly when ``df == 0``."""

    statistic: float
    df: int
    p_asymptotic: float
    degenerate: bool


@dataclass(frozen=True)
class PermutationTestResult:
    observed: float
    permutations: int
    exceed: int
    p_value: float
    seed: int | None = None


@dataclass(frozen=True)
class CommunityReport:
    community_id: int
    size: int
    table: ContingencyTable
    statistic: float
    df: int


@dataclass(frozen=True)
class ConditionalTestReport:
    """Everything the JSON test report carries."""

    statistic: float
    df: int
    p_asymptotic: float
    p_permutation: float | None
    permutations: int
    seed: int | None
    per_community: list[CommunityReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "df": self.df,
            "p_asymptotic": _json_float(self.p_asymptotic),
            "p_permutation": self.p_permutation,
            "permutations": self.permutations,
            "seed": self.seed,
            "per_community": [
                {
                    "community_id": c.community_id,
                    "size": c.size,
                    "table": c.table.as_list(),
                    "statistic": c.statistic,
                    "df": c.df,
                }
                for c in self.per_community
            ],
        }


def _json_float(x: float) -> float | None:
    return None if math.isnan(x) else x


def contingency_from_state(types: Sequence[int] | np.ndarray, traits: Sequence[int] | np.ndarray,
                           subset: Iterable[int] | None = None) -> ContingencyTable:
    t = np.asarray(types, dtype=np.int64)
    y = np.asarray(traits, dtype=np.int64)
    if t.shape != y.shape:
        raise InvalidParameterError(f"types and traits differ in length ({t.size} vs {y.size})")
    if subset is not None:
        idx = np.fromiter(subset, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= t.size):
            raise InvalidParameterError("subset contains nodes outside the population")
        t, y = t[idx], y[idx]
    counts = np.bincount(2 * t + y, minlength=4)
    return ContingencyTable(counts.reshape(2, 2))


def chi2_2x2(n00: int, n01: int, n10: int, n11: int) -> float:
    """Pearson statistic of ``[[n00, n01], [n10, n11]]``; 0 if any margin is empty."""
    r0, r1 = n00 + n01, n10 + n11
    c0, c1 = n00 + n10, n01 + n11
    denom = r0 * r1 * c0 * c1
    if denom == 0:
        return 0.0
    diff = n00 * n11 - n01 * n10
    # Integer numerator keeps the result exact up to the final division.
    return (r0 + r1) * diff * diff / denom


def chi_squared(table: ContingencyTable) -> ChiSquaredResult:
    (a, b), (c, d) = table.counts.tolist()
    if min(a + b, c + d, a + c, b + d) == 0:
        return ChiSquaredResult(0.0, 0, float("nan"), True)
    stat = chi2_2x2(a, b, c, d)
    return ChiSquaredResult(stat, 1, chi_squared_survival(stat, 1), False)


def chi_squared_survival(x: float, df: int) -> float:
    """Upper tail ``P(X > x)`` of a chi-square variable with ``df`` degrees of freedom."""
    if int(df) != df or df < 1:
        raise InvalidParameterError(f"df must be a positive integer, got {df}")
    if not x >= 0:
        raise InvalidParameterError(f"x must be non-negative, got {x}")
    return float(special.gammaincc(df / 2.0, x / 2.0))


def _block_chi2(types: np.ndarray, traits: np.ndarray) -> tuple[ContingencyTable, ChiSquaredResult]:
    table = contingency_from_state(types, traits)
    return table, chi_squared(table)


def conditional_report(types: Sequence[int] | np.ndarray, traits: Sequence[int] | np.ndarray,
                       blocks: Sequence[Iterable[int]]) -> ConditionalTestReport:
    """Stratified chi-squared with a per-community breakdown."""
    t = np.asarray(types, dtype=np.int64)
    y = np.asarray(traits, dtype=np.int64)
    blocks = [np.fromiter(sorted(b), dtype=np.int64) for b in blocks]
    covered = np.concatenate(blocks) if blocks else np.empty(0, dtype=np.int64)
    if covered.size != t.size or not np.array_equal(np.sort(covered), np.arange(t.size)):
        raise InvalidParameterError("partition must cover every node exactly once")
    total, df, parts = 0.0, 0, []
    for cid, idx in enumerate(blocks):
        table, res = _block_chi2(t[idx], y[idx])
        total += res.statistic
        df += res.df
        parts.append(CommunityReport(cid, int(idx.size), table, res.statistic, res.df))
    p = chi_squared_survival(total, df) if df > 0 else float("nan")
    return ConditionalTestReport(total, df, p, None, 0, None, parts)


def _blocks_of(partition) -> Sequence[Iterable[int]]:
    return partition.blocks if hasattr(partition, "blocks") else partition


def conditional_chi_squared(types: Sequence[int] | np.ndarray, traits: Sequence[int] | np.ndarray,
                            partition) -> ChiSquaredResult:
    """Sum of per-community chi-squared statistics, with summed df.

    ``partition`` is a :class:`~neutralcopy.community.Partition` or any
    sequence of node collections covering every node once.
    """
    rep = conditional_report(types, traits, _blocks_of(partition))
    if rep.df == 0:
        return ChiSquaredResult(rep.statistic, 0, float("nan"), True)
    return ChiSquaredResult(rep.statistic, rep.df, rep.p_asymptotic, False)


def _permuted_statistics(types: np.ndarray, traits: np.ndarray, blocks: list[np.ndarray],
                         permutations: int, rng: np.random.Generator | None) -> tuple[float, np.ndarray]:
    """Observed and permuted stratified statistics, computed by one code path.

    Within a block the type margins and trait margins are fixed, so the whole
    table follows from ``n11`` (type 1, trait 1).
    """
    observed = 0.0
    permuted = np.zeros(permutations)
    for idx in blocks:
        t, y = types[idx], traits[idx]
        size = idx.size
        r1 = int(t.sum())
        c1 = int(y.sum())
        r0, c0 = size - r1, size - c1
        denom = float(r0) * r1 * c0 * c1
        if denom == 0:
            continue

        def stat(n11: np.ndarray) -> np.ndarray:
            n10 = r1 - n11
            n01 = c1 - n11
            n00 = r0 - n01
            diff = (n00 * n11 - n01 * n10).astype(np.float64)
            return size * diff * diff / denom

        observed += float(stat(np.array([int(y[t == 1].sum())]))[0])
        if permutations:
            tiled = np.broadcast_to(y, (permutations, size))
            shuffled = rng.permuted(tiled, axis=1)
            n11 = shuffled[:, t == 1].sum(axis=1).astype(np.int64)
            permuted += stat(n11)
    return observed, permuted


def permutation_test_conditional(types: Sequence[int] | np.ndarray, traits: Sequence[int] | np.ndarray,
                                 partition, permutations: int,
                                 rng: np.random.Generator | int) -> PermutationTestResult:
    """Within-community label-shuffle test of conditional independence.

    Traits are shuffled independently inside each community, which keeps every
    community's trait count and all type labels fixed. The p-value is
    ``(k + 1) / (P + 1)`` where ``k`` counts permuted statistics at least as
    large as the observed one. An integer ``rng`` is taken as a seed.
    """
    if int(permutations) != permutations or permutations < 1:
        raise InvalidParameterError(f"permutation count must be >= 1, got {permutations}")
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = check_seed(rng)
        rng = stream(seed)
    t = np.asarray(types, dtype=np.int64)
    y = np.asarray(traits, dtype=np.int64)
    if t.shape != y.shape:
        raise InvalidParameterError("types and traits differ in length")
    blocks = [np.fromiter(sorted(b), dtype=np.int64) for b in _blocks_of(partition)]
    observed, permuted = _permuted_statistics(t, y, blocks, int(permutations), rng)
    threshold = observed - TIE_RTOL * max(1.0, observed)
    k = int(np.count_nonzero(permuted >= threshold))
    return PermutationTestResult(observed, int(permutations), k, (k + 1) / (permutations + 1), seed)
