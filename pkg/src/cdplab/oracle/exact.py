"""Exact probabilities and identity checks on small regions.

Everything here is computed from integer arrangement counts and evaluated
in rational arithmetic, so identities such as the Russo formula hold with
zero residual rather than to rounding error.  Per-edge quantities are
computed once per orbit of the lattice symmetries fixing the origin.
"""

import functools
from dataclasses import dataclass, field
from fractions import Fraction

from ..dynamics import _check_kappa
from ..events import tau_indicator, theta_indicator
from ..lattice import DomainError, edge_orbits
from .arrangements import BudgetError, EventPolynomial, event_polynomial
from .sweep import Geometry, machine_for, sweep_event, sweep_pair, sweep_revealment, sweep_u_pivotal

# edges handled by the sweep engine; d=2, R=2 has 16
SWEEP_BUDGET = 16


def _check(region, kappa, n, budget=SWEEP_BUDGET):
    _check_kappa(region, kappa)
    if int(n) != n or not 1 <= n <= region.R:
        raise DomainError(f"n must be an integer in [1, {region.R}], got {n}")
    if region.num_edges > budget:
        raise BudgetError(
            f"{region} has {region.num_edges} edges; the exact sweep is limited to {budget}"
        )


def _check_p(p, closed=False):
    lo_ok = p >= 0 if closed else p > 0
    hi_ok = p <= 1 if closed else p < 1
    if not (lo_ok and hi_ok):
        raise DomainError(f"p must lie in {'[0, 1]' if closed else '(0, 1)'}, got {p}")


@functools.lru_cache(maxsize=128)
def _event_sweep(region, kappa, n, event):
    machine = machine_for(event, region, kappa, n)
    counts, piv = sweep_event(machine, list(range(region.num_edges)))
    m = region.num_edges
    poly = EventPolynomial(m, counts)
    pivotal = {j: EventPolynomial(m, c + [0]) for j, c in piv.items()}
    return poly, pivotal


def event_poly(region, kappa, n, event="tau", engine="sweep", budget=None):
    """Exact polynomial of ``tau`` (modified one-arm) or ``theta`` (one-arm).

    ``engine="brute"`` evaluates every arrangement through the clock-level
    indicator instead; it is far slower and exists as an independent check.
    """
    if engine == "brute":
        ind = tau_indicator if event == "tau" else theta_indicator
        _check_kappa(region, kappa)
        kw = {} if budget is None else {"budget": budget}
        return event_polynomial(region, lambda c, p: ind(c, p, kappa, n), **kw)
    _check(region, kappa, n, budget or SWEEP_BUDGET)
    return _event_sweep(region, kappa, n, event)[0]


def tau_exact(region, kappa, n, p):
    """Exact probability of the modified one-arm event (``tau_0 = 1``)."""
    if n == 0:
        return Fraction(1)
    _check_p(p, closed=True)
    return event_poly(region, kappa, n).exact(p)


def p_pivotal_polynomials(region, kappa, n):
    """``{edge id: EventPolynomial}`` of the p-pivotal events."""
    _check(region, kappa, n)
    return _event_sweep(region, kappa, n, "tau")[1]


def _orbit_map(region):
    return {j: rep for rep, members in edge_orbits(region) for j in members}


@functools.lru_cache(maxsize=512)
def _u_pivotal(region, kappa, n, rep):
    machine = machine_for("tau", region, kappa, n)
    m = region.num_edges
    return EventPolynomial(m - 1, sweep_u_pivotal(machine, list(range(m)), rep))


@functools.lru_cache(maxsize=512)
def _influence(region, kappa, n, rep):
    machine = machine_for("tau", region, kappa, n)
    m = region.num_edges
    return EventPolynomial(m + 1, sweep_pair(machine, list(range(m)), rep))


@functools.lru_cache(maxsize=512)
def _reveal(region, kappa, n, rep):
    counts = sweep_revealment(Geometry(region, n), kappa, list(range(region.num_edges)), rep)
    return {r: EventPolynomial(region.num_edges, c) for r, c in counts.items()}


def u_pivotal_polynomial(region, kappa, n, e):
    _check(region, kappa, n)
    return _u_pivotal(region, kappa, n, _orbit_map(region)[region.eid(e)])


def influence_polynomial(region, kappa, n, e):
    """Polynomial in ``m + 1`` clocks: the others, ``u(e)`` and its resample."""
    _check(region, kappa, n)
    return _influence(region, kappa, n, _orbit_map(region)[region.eid(e)])


def influence_exact(region, kappa, n, p, e):
    """Exact probability that resampling ``u(e)`` changes the modified one-arm indicator."""
    _check_p(p)
    return influence_polynomial(region, kappa, n, e).exact(p)


def u_pivotal_exact(region, kappa, n, p, e):
    _check_p(p)
    return u_pivotal_polynomial(region, kappa, n, e).exact(p)


def revealment_exact(region, kappa, n, p, e, algorithm="mixture"):
    """Exact probability that the exploration reveals edge ``e``.

    ``algorithm`` is ``"mixture"`` (r uniform on 1..n) or a fixed integer r.
    """
    _check(region, kappa, n)
    _check_p(p)
    per_r = _reveal(region, kappa, n, _orbit_map(region)[region.eid(e)])
    if algorithm == "mixture":
        return sum((poly.exact(p) for poly in per_r.values()), Fraction(0)) / n
    r = int(algorithm)
    if r not in per_r:
        raise DomainError(f"r must be in [1, {n}], got {algorithm}")
    return per_r[r].exact(p)


@dataclass
class RussoReport:
    derivative: Fraction
    pivotal_sum: Fraction
    rhs: Fraction
    residual: float
    exact_zero: bool


def russo_check(region, kappa, n, p):
    """Compare ``d tau_n / dp`` with ``sum_e P(e p-pivotal) / (1 - p)``."""
    _check_p(p)
    poly = event_poly(region, kappa, n)
    piv = p_pivotal_polynomials(region, kappa, n)
    deriv = poly.derivative(p)
    total = sum((q.exact(p) for q in piv.values()), Fraction(0))
    rhs = total / (1 - Fraction(p))
    diff = abs(deriv - rhs)
    return RussoReport(deriv, total, rhs, float(diff), diff == 0)


def russo_residual(region, kappa, n, p):
    return russo_check(region, kappa, n, p).residual


@dataclass
class OsssReport:
    variance: Fraction
    bound: Fraction
    holds: bool
    revealment: dict = field(default_factory=dict)
    influence: dict = field(default_factory=dict)

    @property
    def slack(self):
        return float(self.bound - self.variance)


def osss_check(region, kappa, n, p, algorithm="mixture"):
    """Exact OSSS inequality ``Var <= sum_e delta_e Inf_e`` for the modified one-arm event."""
    _check(region, kappa, n)
    _check_p(p, closed=True)
    if p in (0, 1):
        # the indicator is a constant
        tau = event_poly(region, kappa, n).exact(p)
        return OsssReport(tau * (1 - tau), Fraction(0), True)
    tau = event_poly(region, kappa, n).exact(p)
    var = tau * (1 - tau)
    delta, inf = {}, {}
    bound = Fraction(0)
    for j, e in enumerate(region.edges):
        delta[e] = revealment_exact(region, kappa, n, p, j, algorithm)
        inf[e] = influence_exact(region, kappa, n, p, j)
        bound += delta[e] * inf[e]
    return OsssReport(var, bound, var <= bound, delta, inf)


def differential_inequality_check(region, kappa, n_max, p):
    """Rows ``(n, tau_n, tau_n', Sigma_n, lhs, rhs, C)`` for ``n = 1 .. n_max``.

    ``lhs = tau_n'`` and ``rhs = n tau_n / Sigma_n``; ``C = rhs / lhs`` is the
    smallest constant making ``tau_n' >= n tau_n / (C Sigma_n)`` true.
    """
    _check_p(p)
    if not 1 <= n_max <= region.R:
        raise DomainError(f"n_max must be in [1, {region.R}], got {n_max}")
    taus = [Fraction(1)]
    rows = []
    for n in range(1, n_max + 1):
        poly = event_poly(region, kappa, n)
        tau = poly.exact(p)
        dtau = poly.derivative(p)
        sigma = sum(taus, Fraction(0))
        rhs = n * tau / sigma
        C = rhs / dtau if dtau else float("inf")
        rows.append({
            "n": n,
            "tau": float(tau),
            "dtau": float(dtau),
            "sigma": float(sigma),
            "lhs": float(dtau),
            "rhs": float(rhs),
            "C": float(C),
        })
        taus.append(tau)
    return rows
