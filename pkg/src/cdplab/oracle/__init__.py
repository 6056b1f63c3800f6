"""Exact small-instance probabilities for the degree-capped dynamics."""

from .arrangements import (
    DEFAULT_BUDGET,
    MAX_BUDGET,
    Arrangement,
    BudgetError,
    EventPolynomial,
    arrangement_count,
    arrangement_of,
    event_polynomial,
    iter_arrangements,
    representative_clock,
)
from .exact import (
    SWEEP_BUDGET,
    OsssReport,
    RussoReport,
    differential_inequality_check,
    event_poly,
    influence_exact,
    influence_polynomial,
    osss_check,
    p_pivotal_polynomials,
    revealment_exact,
    russo_check,
    russo_residual,
    tau_exact,
    u_pivotal_exact,
    u_pivotal_polynomial,
)

__all__ = [
    "DEFAULT_BUDGET",
    "MAX_BUDGET",
    "SWEEP_BUDGET",
    "Arrangement",
    "BudgetError",
    "EventPolynomial",
    "OsssReport",
    "RussoReport",
    "arrangement_count",
    "arrangement_of",
    "differential_inequality_check",
    "event_poly",
    "event_polynomial",
    "influence_exact",
    "influence_polynomial",
    "iter_arrangements",
    "osss_check",
    "p_pivotal_polynomials",
    "representative_clock",
    "revealment_exact",
    "russo_check",
    "russo_residual",
    "tau_exact",
    "u_pivotal_exact",
    "u_pivotal_polynomial",
]
