"""Cyclic cumulants of structured random matrix ensembles.

Exact partition combinatorics, seeded Monte Carlo estimators, scaling-law
verdicts, a non-crossing-partition trace formula, and a symbolic oracle for
the N-power accounting of disjoint-cycle cumulants.
"""

__version__ = "0.1.0"

from .partitions import (
    IntervalPartition,
    SetPartition,
    SizeLimitError,
    bell_number,
    catalan_number,
    connecting_partitions,
    enumerate_noncrossing,
    enumerate_partitions,
    export_partitions,
    is_noncrossing,
    join,
    kreweras_complement,
    moebius_weight,
    parse_partition,
)
from .profiles import Profile1D, Profile2D
from .ensembles import (
    DeterministicEnsemble,
    EnsembleSpec,
    MatrixSample,
    diagonal_profile,
    gauge_transform,
    hermitize,
    shift_diagonal,
)
from .transforms import (
    EntrywiseSpec,
    PolySpec,
    apply_transform,
    entrywise_apply,
    poly_apply,
)
from .cumulants import (
    CumulantEstimate,
    EntryCycle,
    TracePower,
    TraceWithDiagonals,
    estimate_cumulant,
    estimate_cyclic_cumulant,
    estimate_trace_cumulant,
    evaluate_observable,
    joint_cumulant,
)
from .scaling import (
    CheckReport,
    NGrid,
    ScalingFit,
    ZeroBound,
    fit_exponent,
    verify_continuity,
    verify_cyclic_scaling,
    verify_disjoint_scaling,
    verify_self_averaging,
    verify_trace_scaling,
    verify_transform_stability,
)
from .theory import (
    LocalFreeCumulantModel,
    TraceExpectationResult,
    compare_theory_vs_mc,
    free_cumulants_from_moments,
    moments_from_free_cumulants,
    theory_trace_expectation,
)
from .oracle import (
    ClaimCheckResult,
    Cycle,
    CycleSpec,
    Move,
    apply_move,
    claim_check,
    entrywise_oracle,
    exponent_of_partition,
    factorized_start,
    leading_exponent,
    reachable_set,
)
