"""Qudit ballot protocol simulator."""

from ._core import (
    AuthoritySecrets,
    BudgetError,
    InvariantError,
    ValidationError,
    analytic_pq,
    monte_carlo_pq,
    run_protocol,
    run_round,
    run_scenario,
    run_swap_attack,
)

__all__ = [
    "AuthoritySecrets",
    "BudgetError",
    "InvariantError",
    "ValidationError",
    "analytic_pq",
    "monte_carlo_pq",
    "run_protocol",
    "run_round",
    "run_scenario",
    "run_swap_attack",
]
