"""relaxvol: volumes, oracles, and experiments for relaxations of the
on/off disjunction x in {0} U [lo, hi] with a convex cost term."""

from .errors import (
    CapabilityError,
    DomainError,
    InputError,
    NumericalError,
    RelaxvolError,
)
from .functions import (
    BoundPair,
    ConvexFunction,
    EnvelopeFunction,
    ExponentialFunction,
    PowerFunction,
    build_envelope,
    function_from_json,
    function_to_json,
    secant,
)
from .volumes import (
    Cap,
    RelaxationKind,
    RelaxationSpec,
    VolumeMethod,
    VolumeReport,
    exp_asymptotic_ratio,
    piecewise_gain_ratio,
    threshold_k,
    vol_delta,
    vol_diff,
    vol_naive_capped,
    vol_naive_simple,
    vol_perspective,
    vol_piecewise,
    vol_power_family,
    vol_ratio,
    volume_of,
)
from .geometry import (
    McEstimate,
    Point3,
    contains,
    contains_batch,
    mc_volume,
    mfcq_certificate,
    perspective_constraint_gradient,
    power_cone_form,
    verify_nesting,
)
from .advisor import (
    RankingKind,
    RankingStrategy,
    VariableProfile,
    kendall_tau,
    profile,
    rank,
    spearman_rho,
)
from .experiments import (
    KnapsackInstance,
    MeanVarianceInstance,
    SolveResult,
    SolveStatus,
    SweepRow,
    generate_knapsack,
    generate_meanvar,
    run_budget_sweep,
    solve_meanvar,
    solve_relaxation,
    sweep_to_csv,
)

__version__ = "0.1.0"
