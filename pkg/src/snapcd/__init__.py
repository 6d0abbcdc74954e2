"""Targeted causal discovery toolkit.

Learns only the part of a CPDAG relevant to a set of target variables by
sequentially pruning definite non-ancestors, and estimates pairwise causal
effects with statistically efficient adjustment sets.
"""

from .errors import (
    CyclicGraphError,
    EmptySelectionError,
    InfeasibleConfigError,
    InsufficientSamplesError,
    InvalidQueryError,
    MissingPairError,
    MissingSepsetError,
    NoIdentifiableSetError,
    NotCategoricalError,
    NotContinuousError,
    NotIdentifiableError,
    SingularCovarianceError,
    SingularDesignError,
    SizeMismatchError,
    SnapError,
    UndirectedIncidenceError,
)
from .graphs import (
    ARROW,
    TAIL,
    Dag,
    MixedGraph,
    SepsetMap,
    ancestors,
    cpdag_of,
    d_separated,
    descendants,
    induced_subgraph,
    meek_closure,
    possible_ancestors,
    possible_descendants,
    shd,
    topological_order,
    vstructures,
)
from .citests import (
    CATEGORICAL,
    CONTINUOUS,
    ChiSquareTester,
    CITester,
    CounterSnapshot,
    Dataset,
    FisherZTester,
    OracleTester,
    TestCounter,
)
from .discovery import (
    DiscoveryResult,
    DiscoveryState,
    RfciStats,
    orient_vstructures_pc,
    orient_vstructures_rfci,
    pc,
    prune_non_ancestors,
    skeleton_step,
    snap_inf,
    snap_k,
    snap_prefilter_then,
)
from .adjustment import (
    EffectEstimate,
    canonical_adjustment,
    causal_nodes,
    estimate_effect_ols,
    forbidden_set,
    intervention_distance,
    is_amenable,
    optimal_adjustment,
    parent_adjustment,
    possible_effects_local,
    true_total_effect,
)
from .synthetic import (
    CptSpec,
    GenConfig,
    SemSpec,
    expected_possible_ancestors,
    random_cpt,
    random_dag,
    random_sem,
    sample_binary,
    sample_linear_gaussian,
    sample_targets,
)

__version__ = "0.1.0"
