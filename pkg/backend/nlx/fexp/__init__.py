"""F-expectation operators, default corpora and the checker suite."""

from .checks import (
    check_axioms,
    check_boundedness,
    check_consequences,
    check_domination,
    check_supermartingale,
    check_translation,
    locality_check,
    optional_stopping_check,
    run_domination_suite,
)
from .corpus import (
    CLAIM_BUILDERS,
    all_pairs,
    default_claims,
    default_events,
    measurable_claims,
    noise_claim,
    ordered_pairs,
    shift_claims,
)
from .operators import (
    ClassicalExpectation,
    DriftUncertaintyExpectation,
    FExpectationOperator,
    GeneratorExpectation,
    Provenance,
    RecursiveExpectation,
    UserDefinedExpectation,
    classical,
    drift_uncertainty,
    from_generator,
    make_operator,
    phi_expectation,
    user_defined,
)

__all__ = [
    "CLAIM_BUILDERS",
    "ClassicalExpectation",
    "DriftUncertaintyExpectation",
    "FExpectationOperator",
    "GeneratorExpectation",
    "Provenance",
    "RecursiveExpectation",
    "UserDefinedExpectation",
    "all_pairs",
    "check_axioms",
    "check_boundedness",
    "check_consequences",
    "check_domination",
    "check_supermartingale",
    "check_translation",
    "classical",
    "default_claims",
    "default_events",
    "drift_uncertainty",
    "from_generator",
    "locality_check",
    "make_operator",
    "measurable_claims",
    "noise_claim",
    "optional_stopping_check",
    "ordered_pairs",
    "phi_expectation",
    "run_domination_suite",
    "shift_claims",
    "user_defined",
]
