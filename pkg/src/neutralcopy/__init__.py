"""Neutral copying dynamics on homophilous networks.

Simulates voter-model copying of a binary cultural trait on two-type
planted-partition graphs and tests whether social type and trait are
independent, unconditionally or within Girvan-Newman communities.
"""

__version__ = "0.1.0"

from neutralcopy.graph import (
    Graph,
    GeneratorParams,
    MixingSummary,
    connected_components,
    generate_planted_partition,
    mixing_summary,
)
from neutralcopy.dynamics import (
    BiasMatrix,
    StepClock,
    TrajectoryRecord,
    biased_step,
    exact_absorption_oracle,
    init_uniform_traits,
    is_absorbed,
    neutral_step,
    run,
)
from neutralcopy.stats import (
    ChiSquaredResult,
    ContingencyTable,
    PermutationTestResult,
    chi_squared,
    chi_squared_survival,
    conditional_chi_squared,
    contingency_from_state,
    permutation_test_conditional,
)
from neutralcopy.community import (
    Dendrogram,
    Partition,
    edge_betweenness,
    girvan_newman,
    modularity,
)

__all__ = [
    "BiasMatrix",
    "ChiSquaredResult",
    "ContingencyTable",
    "Dendrogram",
    "GeneratorParams",
    "Graph",
    "MixingSummary",
    "Partition",
    "PermutationTestResult",
    "StepClock",
    "TrajectoryRecord",
    "biased_step",
    "chi_squared",
    "chi_squared_survival",
    "conditional_chi_squared",
    "connected_components",
    "contingency_from_state",
    "edge_betweenness",
    "exact_absorption_oracle",
    "generate_planted_partition",
    "girvan_newman",
    "init_uniform_traits",
    "is_absorbed",
    "mixing_summary",
    "modularity",
    "neutral_step",
    "permutation_test_conditional",
    "run",
]
