"""Maximal out-degree of Galton-Watson trees.

Exact computation of the law of the maximal out-degree, exact sampling of
GW trees conditioned on it, samplers for the size-biased limit trees (spine
and condensation constructions), and a verification harness comparing
conditional graft probabilities against their limit values.
"""

from .errors import (
    BudgetExceededError,
    GWError,
    LawError,
    NullEventError,
    RegimeError,
    TrialLimitError,
    UndecidableError,
)
from .offspring import (
    BiasedLaw,
    Criticality,
    CustomLaw,
    ExplicitLaw,
    GeometricLaw,
    OffspringLaw,
    PoissonLaw,
    PowerLawLaw,
    law_from_json,
    law_to_json,
)
from .trees import (
    FiniteTree,
    GraftEvent,
    GraftKind,
    Mark,
    PartialNode,
    PartialTree,
    truncate,
)
from .maxdeg import MaxDegTable, solve_H, theorem_tail_report
from .sampler import (
    ConditionedLaw,
    SampleConfig,
    expected_trials,
    sample_conditioned_eq,
    sample_conditioned_gt,
    sample_conditioned_le,
    sample_gw,
    sample_limit_tree,
)
from . import convergence, oracle

__version__ = "0.1.0"
