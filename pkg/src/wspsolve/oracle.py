"""Ground-truth solver: exhaustive enumeration of complete plans.

Walks every one of the ``n^k`` complete plans in odometer order and
validates each against the instance directly.  No pruning, no pattern
search, no matching test: this is deliberately the dumbest correct
solver, kept independent of the machinery it is used to check.  Valid
plans are grouped by their canonical pattern, keeping the first witness
found for each.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .model import SAT, UNSAT, Plan, Valid, WorkflowInstance, validate_plan
from .pattern import encode

#: Refuse to enumerate more complete plans than this by default.
DEFAULT_PLAN_BUDGET = 2_000_000

MAX_ORACLE_STEPS = 8


class BudgetExceededError(ValueError):
    """The instance has more complete plans than the enumeration budget."""


@dataclass(frozen=True)
class OracleResult:
    status: str  # SAT or UNSAT
    valid_patterns: tuple[tuple[int, ...], ...]  # sorted
    witnesses: dict[tuple[int, ...], Plan]

    @property
    def is_sat(self) -> bool:
        return self.status == SAT


def oracle_solve(
    instance: WorkflowInstance, *, max_plans: int = DEFAULT_PLAN_BUDGET
) -> OracleResult:
    """Enumerate all complete plans and report every valid pattern.

    Only meant for small instances: requires at most 8 steps and
    ``users ** steps`` within ``max_plans``.
    """
    k = instance.step_count
    n = instance.user_count
    if k > MAX_ORACLE_STEPS:
        raise ValueError(f"oracle limited to {MAX_ORACLE_STEPS} steps, got {k}")
    total = n**k
    if total > max_plans:
        raise BudgetExceededError(
            f"{n}^{k} = {total} complete plans exceeds the budget of {max_plans}"
        )
    steps = range(k)
    witnesses: dict[tuple[int, ...], Plan] = {}
    for combo in itertools.product(range(n), repeat=k):
        plan = dict(zip(steps, combo))
        if isinstance(validate_plan(instance, plan), Valid):
            pat = encode(plan, k)
            if pat not in witnesses:
                witnesses[pat] = plan
    patterns = tuple(sorted(witnesses))
    return OracleResult(SAT if patterns else UNSAT, patterns, witnesses)
