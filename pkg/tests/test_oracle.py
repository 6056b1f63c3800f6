"""Exact small-instance oracle: frozen values, closed forms and cross-checks."""

import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from cdplab.dynamics import sample_clock
from cdplab.estimator import estimate_event
from cdplab.events import tau_indicator, theta_indicator
from cdplab.explorer import run_Ar
from cdplab.lattice import box
from cdplab.oracle import (
    Arrangement,
    BudgetError,
    EventPolynomial,
    arrangement_count,
    arrangement_of,
    differential_inequality_check,
    event_poly,
    event_polynomial,
    influence_exact,
    iter_arrangements,
    osss_check,
    p_pivotal_polynomials,
    representative_clock,
    revealment_exact,
    russo_check,
    tau_exact,
    u_pivotal_exact,
)
from cdplab.oracle.sweep import (
    TRUE,
    Geometry,
    machine_for,
    sweep_event,
    sweep_pair,
    sweep_revealment,
    sweep_u_pivotal,
)
from cdplab.pivotality import is_p_pivotal, is_u_pivotal

S4 = box(2, 1)
B2 = box(2, 2)

# frozen from the first exact run; d=2, R=2, n=2
TAU_B2 = [0, 0, 24, 936, 21264, 352800, 4669920, 51791040, 492912000, 4058449920,
          28805414400, 173877580800, 871303910400, 3487131648000, 10461394944000,
          20922789888000, 20922789888000]
THETA_B2_K2 = [0, 0, 24, 912, 19776, 316944, 4137840, 45936000, 440933760, 3672051840,
               26361486720, 160705036800, 811428710400, 3262958899200, 9807557760000,
               19615115520000, 19615115520000]
THETA_B2_K3 = [0, 0, 24, 936, 21240, 351000, 4626720, 51088320, 485034480, 3994220160,
               28405339200, 171931636800, 863909323200, 3465337075200, 10412357155200,
               20841060240000, 20841060240000]

PS = [Fraction(1, 5), Fraction(1, 2), Fraction(4, 5)]


def test_arrangement_counts():
    assert arrangement_count(4) == 65
    assert sum(1 for _ in iter_arrangements(range(4))) == 65
    with pytest.raises(BudgetError):
        event_poly(B2, 3, 2, engine="brute")


def test_representative_round_trip():
    e2, e1 = ((0, 0), (0, 1)), ((0, 0), (1, 0))
    a = Arrangement((e2, e1), frozenset({((-1, 0), (0, 0)), ((0, -1), (0, 0))}))
    c = representative_clock(a, 0.5, S4)
    u = [c.value(S4.eid(e)) for e in S4.edges]
    ids = [S4.eid(e) for e in a.above]
    assert c.value(S4.eid(e2)) < c.value(S4.eid(e1)) <= 0.5 < min(u[j] for j in ids)
    assert arrangement_of(c, 0.5) == a
    empty = Arrangement((), frozenset(S4.edges))
    assert (representative_clock(empty, 0.5, S4).u > 0.5).all()


def test_always_true_polynomial():
    poly = event_polynomial(S4, lambda c, p: True)
    assert poly.counts == [math.perm(4, k) for k in range(5)]
    for p in PS:
        assert poly.exact(p) == 1


@pytest.mark.parametrize("kappa", [2, 3, 4])
def test_star_closed_form(kappa):
    for event in ("tau", "theta"):
        poly = event_poly(S4, kappa, 1, event)
        for p in PS:
            assert poly.exact(p) == 1 - (1 - p) ** 4
            assert poly.derivative(p) == 4 * (1 - p) ** 3
    assert event_poly(S4, kappa, 1, engine="brute") == event_poly(S4, kappa, 1)


def test_frozen_radius_two():
    for kappa in (2, 3, 4):
        assert event_poly(B2, kappa, 2, "tau").counts == TAU_B2
    assert event_poly(B2, 2, 2, "theta").counts == THETA_B2_K2
    assert event_poly(B2, 3, 2, "theta").counts == THETA_B2_K3
    # Bernoulli: theta and tau coincide when all interior edges count
    assert event_poly(B2, 4, 2, "theta").counts == TAU_B2


def test_polynomial_normalisation():
    for kappa in (2, 3):
        poly = event_poly(B2, kappa, 2)
        for p in np.linspace(0, 1, 11):
            assert 0 <= poly.exact(Fraction(p)) <= 1
    assert tau_exact(B2, 3, 0, 0.3) == 1


def test_polynomial_validation():
    with pytest.raises(ValueError):
        EventPolynomial(2, [0, 3, 0])


@pytest.mark.parametrize("R,n", [(1, 1), (2, 1), (2, 2)])
@pytest.mark.parametrize("kappa", [2, 3, 4])
def test_sweep_matches_brute_force_on_free_subsets(R, n, kappa):
    """Sweep DP against literal enumeration; non-free edges held above p."""
    reg = box(2, R)
    rnd = random.Random(R * 100 + n * 10 + kappa)
    free = None if R == 1 else sorted(rnd.sample(range(reg.num_edges), 7))
    items = free if free is not None else list(range(reg.num_edges))
    for event, ind in (("tau", tau_indicator), ("theta", theta_indicator)):
        mach = machine_for(event, reg, kappa, n)
        counts, piv = sweep_event(mach, items)
        brute = event_polynomial(reg, lambda c, p: ind(c, p, kappa, n), free=free)
        assert counts == brute.counts
        if event == "tau":
            for e in items[:3]:
                bp = event_polynomial(reg, lambda c, p: is_p_pivotal(c, p, kappa, n, e), free=free)
                assert bp.counts[:-1] == piv[e] and bp.counts[-1] == 0
                bu = event_polynomial(reg, lambda c, p: is_u_pivotal(c, p, kappa, n, e),
                                      free=[x for x in items if x != e])
                assert sweep_u_pivotal(mach, items, e) == bu.counts


def _run(mach, order):
    s = mach.start()
    for j in order:
        s = mach.step(s, j)
    return s is TRUE


@pytest.mark.parametrize("kappa", [2, 3])
def test_influence_sweep_matches_permutations(kappa):
    mach = machine_for("tau", B2, kappa, 2)
    items, e = [0, 3, 5, 7, 9, 12], 5
    others = [j for j in items if j != e]
    toks = others + ["a", "b"]

    def run(seq, which):
        return _run(mach, [e if j == which else j for j in seq if j not in ("a", "b") or j == which])

    cnt = [0] * (len(toks) + 1)
    for k in range(len(toks) + 1):
        for seq in itertools.permutations(toks, k):
            if run(seq, "a") != run(seq, "b"):
                cnt[k] += 1
    assert sweep_pair(mach, items, e) == cnt


def test_revealment_sweep_matches_explorer():
    rnd = random.Random(3)
    for _ in range(4):
        kappa = rnd.choice([2, 3, 4])
        n = rnd.choice([1, 2])
        free = sorted(rnd.sample(range(16), 6))
        e = rnd.choice(free)
        cnt = sweep_revealment(Geometry(B2, n), kappa, free, e)
        for r in range(1, n + 1):
            bp = event_polynomial(
                B2, lambda c, p: B2.edges[e] in run_Ar(c, p, kappa, n, r, log=False)[1], free=free)
            assert bp.counts == cnt[r]


@pytest.mark.parametrize("seed", range(3))
def test_arrangement_invariance(seed):
    """Events and pivotality depend on the clock only through its arrangement."""
    g = np.random.default_rng(seed)
    p = 0.5
    for _ in range(30):
        c = sample_clock(S4, int(g.integers(2**62)))
        a = arrangement_of(c, p)
        for c2 in (representative_clock(a, p, S4), representative_clock(a, p, S4, jitter=g)):
            assert arrangement_of(c2, p) == a
            for kappa in (2, 3):
                assert tau_indicator(c, p, kappa, 1) == tau_indicator(c2, p, kappa, 1)
                assert theta_indicator(c, p, kappa, 1) == theta_indicator(c2, p, kappa, 1)
                for e in range(4):
                    assert is_p_pivotal(c, p, kappa, 1, e) == is_p_pivotal(c2, p, kappa, 1, e)
                    assert is_u_pivotal(c, p, kappa, 1, e) == is_u_pivotal(c2, p, kappa, 1, e)


def test_russo_star_closed_form():
    rep = russo_check(S4, 3, 1, 0.5)
    assert rep.derivative == Fraction(1, 2)
    assert rep.pivotal_sum == Fraction(1, 4)
    assert rep.rhs == Fraction(1, 2)
    assert rep.residual == 0 and rep.exact_zero


@pytest.mark.parametrize("R,n,kappa", [(1, 1, 2), (1, 1, 3), (1, 1, 4), (2, 2, 3), (2, 2, 4),
                                       (2, 1, 2)])
def test_russo_exact(R, n, kappa):
    reg = box(2, R)
    for p in (0.2, 0.5, 0.8):
        rep = russo_check(reg, kappa, n, p)
        assert rep.exact_zero
    # pivotal polynomials are symmetric over edge orbits
    pp = p_pivotal_polynomials(reg, kappa, n)
    assert len(pp) == reg.num_edges


def test_influence_star():
    vals = {influence_exact(S4, 3, 1, Fraction(1, 2), e) for e in range(4)}
    assert vals == {Fraction(1, 16)}
    assert u_pivotal_exact(S4, 3, 1, Fraction(1, 2), 0) == Fraction(1, 8)


@pytest.mark.parametrize("R,n", [(1, 1), (2, 2), (2, 1)])
@pytest.mark.parametrize("kappa", [2, 3, 4])
def test_influence_below_u_pivotal(R, n, kappa):
    reg = box(2, R)
    for p in (Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)):
        for e in range(reg.num_edges):
            assert influence_exact(reg, kappa, n, p, e) <= u_pivotal_exact(reg, kappa, n, p, e)


def test_far_edge_has_zero_influence():
    # n=1 never looks beyond the star
    far = B2.eid(((1, 0), (2, 0)))
    assert influence_exact(B2, 4, 1, Fraction(1, 2), far) == 0


def test_osss_star_fixture():
    rep = osss_check(S4, 3, 1, Fraction(1, 2))
    assert rep.variance == Fraction(15, 256)
    assert rep.bound == Fraction(1, 4)
    assert rep.holds and rep.slack > 0
    assert set(rep.revealment.values()) == {1}


def test_osss_deterministic_and_radius_two():
    rep = osss_check(S4, 3, 1, 0.0)
    assert rep.variance == 0 and rep.holds
    rep = osss_check(B2, 4, 2, 0.45)
    assert rep.holds
    assert float(rep.variance) == pytest.approx(0.12921, abs=1e-4)
    assert float(rep.bound) == pytest.approx(0.59183, abs=1e-4)


def test_revealment_mixture_is_average():
    p = Fraction(1, 2)
    for e in range(B2.num_edges):
        mix = revealment_exact(B2, 3, 2, p, e)
        per_r = [revealment_exact(B2, 3, 2, p, e, algorithm=r) for r in (1, 2)]
        assert mix == sum(per_r) / 2


def test_differential_inequality_star():
    rows = differential_inequality_check(S4, 3, 1, 0.5)
    assert rows[0]["sigma"] == 1
    assert rows[0]["C"] == pytest.approx(1.875)
    rows = differential_inequality_check(B2, 3, 2, 0.5)
    assert all(math.isfinite(r["C"]) and r["C"] > 0 for r in rows)


@pytest.mark.parametrize("d,n", [(2, 1), (2, 2), (3, 1)])
def test_oracle_agrees_with_monte_carlo(d, n):
    """Bernoulli events only see the ball of radius n, so the oracle is exact there."""
    for event in ("theta", "tau"):
        poly = event_poly(box(d, n), 2 * d, n, event)
        for p in (0.3, 0.6):
            est = estimate_event(event, d, 2 * d, n, p, 20000, 17)
            assert abs(est.value - float(poly(p))) <= 4 * est.stderr
