"""Accumulation tests for false discovery control on ordered p-values.

The package estimates the false discovery proportion along a ranked
list of hypotheses by averaging a nonnegative unit-integral transform
of each p-value, then rejects the longest prefix whose estimate stays
below the target level.  Alongside the core test it ships the
classical step-up baselines, asymptotic power calculations for signal
curves, a reproducible simulation lab, and a dose-response permutation
pipeline.
"""

from .errors import AccumTestError, ContractError, DomainError, ValidationError
from .accumfn import (
    AccumulationSpec,
    Family,
    evaluate,
    format_spec,
    forward_stop,
    hinge_exp,
    nonnull_mean,
    parse_spec,
    piecewise_constant,
    seq_step,
    truncated_integral,
    unit_integral,
)
from .densities import AlternativeDensity, DensityForm
from .seqtest import (
    CutoffResult,
    OrderedPValues,
    Rule,
    estimated_fdp_path,
    estimated_fdp_path_plus,
    fdp,
    mfdp,
    power_of_cutoff,
    run_accumulation_test,
    select_cutoff,
    shift_discrete_pvalues,
)
from .baselines import RejectionSet, bh_select, storey_select
from .power_theory import (
    CurveCheck,
    CurveReport,
    SignalCurve,
    asymptotic_power,
    asymptotic_threshold,
    centered_mgf,
    envelope_exit_fraction,
    expected_fdp_curve,
    format_curve,
    parse_curve,
    random_walk_envelope,
    step_optimality_gap,
    validate_signal_curve,
)
from .simlab import (
    AggregateResult,
    Method,
    SimConfig,
    TrialFrame,
    aggregate,
    child_rng,
    child_seed,
    collect_trial_frames,
    default_methods,
    generate_from_curve,
    generate_ranked_trial,
    normal_cdf,
    normal_quantile,
    run_simulation,
    run_trial,
    simulate_count_ratio,
)
from .dosage import (
    ExpressionMatrix,
    GeneRecord,
    Group,
    HighDoseRank,
    PipelineResult,
    Sign,
    high_dose_ordering,
    permutation_pvalue,
    read_expression_csv,
    run_pipeline,
    welch_p_one_sided,
    welch_p_two_sided,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AccumTestError",
    "ContractError",
    "DomainError",
    "ValidationError",
    "AccumulationSpec",
    "Family",
    "evaluate",
    "format_spec",
    "forward_stop",
    "hinge_exp",
    "nonnull_mean",
    "parse_spec",
    "piecewise_constant",
    "seq_step",
    "truncated_integral",
    "unit_integral",
    "AlternativeDensity",
    "DensityForm",
    "CutoffResult",
    "OrderedPValues",
    "Rule",
    "estimated_fdp_path",
    "estimated_fdp_path_plus",
    "fdp",
    "mfdp",
    "power_of_cutoff",
    "run_accumulation_test",
    "select_cutoff",
    "shift_discrete_pvalues",
    "RejectionSet",
    "bh_select",
    "storey_select",
    "CurveCheck",
    "CurveReport",
    "SignalCurve",
    "asymptotic_power",
    "asymptotic_threshold",
    "centered_mgf",
    "envelope_exit_fraction",
    "expected_fdp_curve",
    "format_curve",
    "parse_curve",
    "random_walk_envelope",
    "step_optimality_gap",
    "validate_signal_curve",
    "AggregateResult",
    "Method",
    "SimConfig",
    "TrialFrame",
    "aggregate",
    "child_rng",
    "child_seed",
    "collect_trial_frames",
    "default_methods",
    "generate_from_curve",
    "generate_ranked_trial",
    "normal_cdf",
    "normal_quantile",
    "run_simulation",
    "run_trial",
    "simulate_count_ratio",
    "ExpressionMatrix",
    "GeneRecord",
    "Group",
    "HighDoseRank",
    "PipelineResult",
    "Sign",
    "high_dose_ordering",
    "permutation_pvalue",
    "read_expression_csv",
    "run_pipeline",
    "welch_p_one_sided",
    "welch_p_two_sided",
]
