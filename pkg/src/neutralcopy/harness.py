"""Replicated experiments: the chi-squared time series and the
conditional-independence contrast.

A replicate is addressed by ``(master_seed, arm, index)``. Its graph seed,
initial traits, dynamics and permutation draws each come from their own
derived stream, so replicate ``i`` does not depend on how many others run.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from neutralcopy import __version__
from neutralcopy.community import Partition, girvan_newman
from neutralcopy.dynamics import BiasMatrix, TrajectoryRecord, init_uniform_traits, run
from neutralcopy.errors import InvalidParameterError
from neutralcopy.graph import (
    GeneratorParams,
    Graph,
    generate_planted_partition,
    mixing_summary,
)
from neutralcopy.rng import (
    FIXED_GRAPH_KEY,
    PURPOSE_DYNAMICS,
    PURPOSE_GRAPH,
    PURPOSE_PERMUTATION,
    PURPOSE_TRAITS,
    check_seed,
    stream,
)
from neutralcopy.stats import ConditionalTestReport, conditional_report, permutation_test_conditional

log = logging.getLogger(__name__)

GRAPH_MODES = ("resample-per-replicate", "fixed-graph")
FORMATS = ("csv", "json")
CHI2_CRITICAL_05 = 3.841458820694124

ARM_ASSORTATIVE = 0
ARM_FLAT = 1
ARM_NAMES = {ARM_ASSORTATIVE: "assortative", ARM_FLAT: "flat"}


def derive_seed(master_seed: int, *keys: int) -> int:
    """64-bit seed for ``generate_planted_partition`` taken from a derived stream."""
    return int(stream(master_seed, *keys).integers(0, 2**64, dtype=np.uint64))


@dataclass
class ExperimentConfig:
    """Parameters of a replicated experiment.

    ``budget`` and ``record_every`` default to ``200 * n`` and ``n`` steps.
    ``bias`` is None for neutral copying, else ``[[b00, b01], [b10, b11]]``.
    ``generator.seed`` is ignored: graph seeds derive from ``master_seed``.
    """

    generator: GeneratorParams = field(default_factory=lambda: GeneratorParams(100, 0.09, 0.01))
    graph_mode: str = "resample-per-replicate"
    bias: list[list[float]] | None = None
    replicates: int = 200
    budget: int | None = None
    record_every: int | None = None
    alpha: float = 0.05
    permutations: int = 1000
    master_seed: int = 0
    flat_p: float = 0.05
    early_stop: bool = True
    output: str = "out"
    format: str = "csv"

    def __post_init__(self) -> None:
        if isinstance(self.generator, dict):
            self.generator = GeneratorParams(**self.generator)
        if self.budget is None:
            self.budget = 200 * self.generator.n
        if self.record_every is None:
            self.record_every = self.generator.n

    @property
    def bias_matrix(self) -> BiasMatrix | None:
        return None if self.bias is None else BiasMatrix(tuple(tuple(r) for r in self.bias))

    def validate(self) -> None:
        dataclasses.replace(self.generator, seed=0).validate()
        if self.graph_mode not in GRAPH_MODES:
            raise InvalidParameterError(f"graph_mode must be one of {GRAPH_MODES}, got {self.graph_mode!r}")
        for name in ("replicates", "budget", "record_every", "permutations"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidParameterError(f"{name} must be a positive integer, got {v}")
        # alpha = 1 is accepted as the degenerate always-reject level.
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.flat_p <= 1.0:
            raise InvalidParameterError(f"flat_p must lie in [0, 1], got {self.flat_p}")
        if self.format not in FORMATS:
            raise InvalidParameterError(f"format must be one of {FORMATS}, got {self.format!r}")
        check_seed(self.master_seed)
        self.bias_matrix

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["generator"].pop("seed")
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidParameterError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        gen = dict(d.pop("generator", {}))
        base = dataclasses.asdict(GeneratorParams(100, 0.09, 0.01))
        bad = set(gen) - set(base)
        if bad:
            raise InvalidParameterError(f"unknown generator field(s): {', '.join(sorted(bad))}")
        base.update(gen)
        return cls(generator=GeneratorParams(**base), **d)


def metadata(config: ExperimentConfig, experiment: str) -> dict[str, Any]:
    """Config echo for output headers; the output path is left out so results
    written to different places stay byte-identical."""
    config_echo = config.to_dict()
    config_echo.pop("output")
    return {
        "artifact": "neutralcopy",
        "version": __version__,
        "experiment": experiment,
        "config": config_echo,
    }


@dataclass
class ReplicateResult:
    index: int
    arm: str
    graph_seed: int
    r: float | None
    edges: int
    peak_chi2: float
    peak_step: int
    absorbed: bool
    absorption_step: int | None
    samples: int
    samples_above_critical: int
    final_chi2: float
    unconditional: ConditionalTestReport | None = None
    conditional: ConditionalTestReport | None = None
    communities: int | None = None
    excluded: bool = False

    def to_dict(self) -> dict[str, Any]:
        d = {k: v for k, v in dataclasses.asdict(self).items() if k not in ("unconditional", "conditional")}
        if self.unconditional is not None:
            d["unconditional"] = self.unconditional.to_dict()
        if self.conditional is not None:
            d["conditional"] = self.conditional.to_dict()
        return d


@dataclass
class Replicate:
    graph: Graph
    types: np.ndarray
    graph_seed: int
    record: TrajectoryRecord


def arm_params(config: ExperimentConfig, arm: int) -> GeneratorParams:
    g = config.generator
    if arm == ARM_FLAT:
        return dataclasses.replace(g, p_within=config.flat_p, p_between=config.flat_p)
    return g


def replicate_graph(config: ExperimentConfig, arm: int, index: int) -> tuple[Graph, np.ndarray, int]:
    key = FIXED_GRAPH_KEY if config.graph_mode == "fixed-graph" else index
    seed = derive_seed(config.master_seed, arm, key, PURPOSE_GRAPH)
    g, types = generate_planted_partition(dataclasses.replace(arm_params(config, arm), seed=seed))
    return g, types, seed


def simulate_replicate(config: ExperimentConfig, arm: int, index: int,
                       keep_states: bool = False, graph: tuple | None = None) -> Replicate:
    """Draw (or reuse) the graph, draw initial traits, run the dynamics."""
    g, types, seed = graph if graph is not None else replicate_graph(config, arm, index)
    s0 = init_uniform_traits(g.n, stream(config.master_seed, arm, index, PURPOSE_TRAITS))
    rec = run(g, types, s0, config.bias_matrix or "neutral", config.budget, config.record_every,
              stream(config.master_seed, arm, index, PURPOSE_DYNAMICS),
              early_stop=config.early_stop, keep_states=keep_states)
    return Replicate(g, types, seed, rec)


def _summarise(rep: Replicate, arm: int, index: int) -> ReplicateResult:
    rec = rep.record
    k = int(np.argmax(rec.chi2))
    mix = mixing_summary(rep.graph, rep.types) if rep.graph.m else None
    ab = rec.absorption_step
    return ReplicateResult(
        index=index,
        arm=ARM_NAMES[arm],
        graph_seed=rep.graph_seed,
        r=mix.r if mix is not None and mix.defined else None,
        edges=rep.graph.m,
        peak_chi2=float(rec.chi2[k]),
        peak_step=int(rec.steps[k]),
        absorbed=ab is not None,
        absorption_step=ab,
        samples=len(rec),
        samples_above_critical=int(np.count_nonzero(rec.chi2 > CHI2_CRITICAL_05)),
        final_chi2=float(rec.chi2[-1]),
    )


def _on_grid(rec: TrajectoryRecord, grid: np.ndarray) -> np.ndarray:
    """chi2 at each grid step; steps past the end carry the last sample (0 once absorbed)."""
    idx = np.searchsorted(rec.steps, grid, side="right") - 1
    return rec.chi2[np.clip(idx, 0, len(rec) - 1)]


@dataclass
class ArmSummary:
    arm: str
    steps: np.ndarray
    median: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    trace: TrajectoryRecord
    replicates: list[ReplicateResult]

    @property
    def peak_median(self) -> float:
        return float(np.median([r.peak_chi2 for r in self.replicates]))

    @property
    def fraction_above_critical(self) -> float:
        total = sum(r.samples for r in self.replicates)
        return sum(r.samples_above_critical for r in self.replicates) / total


@dataclass
class Fig1Result:
    config: ExperimentConfig
    arms: dict[str, ArmSummary]


def run_fig1(config: ExperimentConfig) -> Fig1Result:
    """Chi-squared time series for the assortative and flat settings.

    Per recorded step, reports the median and quartiles of chi-squared over
    replicates, plus replicate 0's full trace as the representative run.
    """
    config.validate()
    grid = np.arange(0, config.budget + 1, config.record_every, dtype=np.int64)
    arms = {}
    for arm in (ARM_ASSORTATIVE, ARM_FLAT):
        fixed = replicate_graph(config, arm, 0) if config.graph_mode == "fixed-graph" else None
        series, results, trace = [], [], None
        for i in range(config.replicates):
            rep = simulate_replicate(config, arm, i, graph=fixed)
            if i == 0:
                trace = rep.record
            series.append(_on_grid(rep.record, grid))
            results.append(_summarise(rep, arm, i))
        mat = np.vstack(series)
        q25, med, q75 = np.percentile(mat, [25, 50, 75], axis=0)
        arms[ARM_NAMES[arm]] = ArmSummary(ARM_NAMES[arm], grid, med, q25, q75, trace, results)
        log.info("fig1 arm %s: %d replicates, median peak chi2 %.3f",
                 ARM_NAMES[arm], config.replicates, arms[ARM_NAMES[arm]].peak_median)
    return Fig1Result(config, arms)


@dataclass
class ContrastResult:
    config: ExperimentConfig
    replicates: list[ReplicateResult]

    @property
    def included(self) -> list[ReplicateResult]:
        return [r for r in self.replicates if not r.excluded]

    @property
    def excluded_count(self) -> int:
        return sum(r.excluded for r in self.replicates)

    def rejection_rate(self, which: str, asymptotic: bool = False) -> float:
        reps = self.included
        if not reps:
            return float("nan")
        alpha = self.config.alpha
        hits = 0
        for r in reps:
            rep = getattr(r, which)
            p = rep.p_asymptotic if asymptotic else rep.p_permutation
            hits += (p is not None and not np.isnan(p) and p <= alpha)
        return hits / len(reps)

    def summary(self) -> dict[str, Any]:
        return {
            "replicates": len(self.replicates),
            "included": len(self.included),
            "excluded": self.excluded_count,
            "alpha": self.config.alpha,
            "reject_unconditional": self.rejection_rate("unconditional"),
            "reject_conditional": self.rejection_rate("conditional"),
            "reject_unconditional_asymptotic": self.rejection_rate("unconditional", True),
            "reject_conditional_asymptotic": self.rejection_rate("conditional", True),
        }


def _test(types, traits, blocks, permutations: int, seed: int) -> ConditionalTestReport:
    rep = conditional_report(types, traits, blocks)
    perm = permutation_test_conditional(types, traits, blocks, permutations, seed)
    return dataclasses.replace(rep, p_permutation=perm.p_value, permutations=permutations, seed=seed)


def run_ci_contrast(config: ExperimentConfig) -> ContrastResult:
    """Unconditional vs community-conditional tests at each replicate's chi-squared peak.

    The test state is the recorded sample with the largest chi-squared
    (earliest on ties). A replicate whose peak sample is already absorbed
    carries no information and is excluded.
    """
    config.validate()
    arm = ARM_ASSORTATIVE
    fixed = replicate_graph(config, arm, 0) if config.graph_mode == "fixed-graph" else None
    fixed_partition: Partition | None = None
    results = []
    for i in range(config.replicates):
        rep = simulate_replicate(config, arm, i, keep_states=True, graph=fixed)
        res = _summarise(rep, arm, i)
        rec = rep.record
        k = int(np.argmax(rec.chi2))
        if rec.absorbed[k]:
            res.excluded = True
            log.info("replicate %d absorbed before any informative sample; excluded", i)
            results.append(res)
            continue
        if fixed is not None:
            if fixed_partition is None:
                fixed_partition = girvan_newman(rep.graph)[1]
            partition = fixed_partition
        else:
            partition = girvan_newman(rep.graph)[1]
        state = rec.states[k]
        seed = derive_seed(config.master_seed, arm, i, PURPOSE_PERMUTATION)
        everyone = [range(rep.graph.n)]
        res.unconditional = _test(rep.types, state, everyone, config.permutations, seed)
        res.conditional = _test(rep.types, state, partition.blocks, config.permutations, seed)
        res.communities = len(partition)
        results.append(res)
    return ContrastResult(config, results)
