"""Workflow satisfiability: assign authorised users to steps under
user-independent constraints, by backtracking over patterns with a
bipartite matching test."""

from .constraints import (
    AtLeast,
    AtMost,
    BindingOfDuty,
    Never,
    NotEquals,
    UserIndependentConstraint,
)
from .generator import GeneratorConfig, SplitMix64, density_to_e, generate
from .matching import (
    PatternGraph,
    build_graph,
    find_full_matching,
    match_blocks,
    matching_to_plan,
)
from .model import (
    SAT,
    TIMEOUT,
    UNSAT,
    AuthorisationLists,
    NotAuthorised,
    ParseError,
    Plan,
    PlanVerdict,
    PreprocessResult,
    SearchStats,
    SolveOutcome,
    Valid,
    Violates,
    WorkflowInstance,
    format_solution,
    parse_instance,
    parse_solution,
    preprocess,
    serialize_instance,
    validate_plan,
)
from .oracle import BudgetExceededError, OracleResult, oracle_solve
from .pattern import (
    EnumerationCounters,
    Pattern,
    canonicalize,
    encode,
    enumerate_complete,
)
from .solver import (
    EnumerationOutcome,
    HeuristicParams,
    SearchState,
    solve,
    solve_enumerating,
)

__version__ = "0.1.0"

__all__ = [
    "AtLeast",
    "AtMost",
    "AuthorisationLists",
    "BindingOfDuty",
    "BudgetExceededError",
    "EnumerationCounters",
    "EnumerationOutcome",
    "GeneratorConfig",
    "HeuristicParams",
    "Never",
    "NotAuthorised",
    "NotEquals",
    "OracleResult",
    "ParseError",
    "Pattern",
    "PatternGraph",
    "Plan",
    "PlanVerdict",
    "PreprocessResult",
    "SAT",
    "SearchState",
    "SearchStats",
    "SolveOutcome",
    "SplitMix64",
    "TIMEOUT",
    "UNSAT",
    "UserIndependentConstraint",
    "Valid",
    "Violates",
    "WorkflowInstance",
    "build_graph",
    "canonicalize",
    "density_to_e",
    "encode",
    "enumerate_complete",
    "find_full_matching",
    "format_solution",
    "match_blocks",
    "generate",
    "matching_to_plan",
    "oracle_solve",
    "parse_instance",
    "parse_solution",
    "preprocess",
    "serialize_instance",
    "solve",
    "solve_enumerating",
    "validate_plan",
]
