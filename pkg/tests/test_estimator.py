import math

import pytest

from cdplab.estimator import (
    BudgetError,
    decay_fit,
    estimate_event,
    estimate_pair,
    fit_log_linear,
    make_estimate,
    pc_bracket,
    sweep_n,
    sweep_p,
    wilson,
)
from cdplab.lattice import DomainError


def test_wilson_and_estimate():
    lo, hi = wilson(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    e = make_estimate(10, 100, 0, 100)
    # fewer than 30 hits -> Wilson interval
    assert e.ci95 == wilson(10, 100)
    e = make_estimate(500, 1000, 5, 1000)
    assert e.value == 0.5 and e.stderr == pytest.approx(math.sqrt(0.25 / 1000))
    assert e.certificate_failure_rate == 0.005


def test_p_zero_gives_zero():
    for event in ("theta", "tau"):
        e = estimate_event(event, 2, 3, 3, 0.0, 200, 1)
        assert e.value == 0.0


def test_bernoulli_star_estimate():
    e = estimate_event("theta", 2, 4, 1, 0.5, 20000, 3, margin=0)
    assert abs(e.value - 0.9375) <= 4 * e.stderr


def test_thread_count_does_not_change_results():
    a = estimate_event("tau", 2, 3, 4, 0.45, 3000, 9, threads=1)
    b = estimate_event("tau", 2, 3, 4, 0.45, 3000, 9, threads=3)
    assert a == b


def test_pair_domination_and_coupling():
    th, ta, dom = estimate_pair(2, 3, 4, 0.5, 3000, 2)
    assert dom == 0 and th.value <= ta.value
    sw = sweep_p("tau", 2, 3, 6, [0.2, 0.4, 0.6, 0.8], 2000, 5)
    assert sw.violations == 0
    vals = [e.value for e in sw.estimates]
    assert vals == sorted(vals)
    rows = list(sw.rows())
    assert len(rows) == 4 and len(rows[0]) == 6


def test_tau_non_increasing_in_n_on_shared_clocks():
    sw = sweep_n("tau", 2, 3, 0.5, [2, 4, 6], 2000, 4)
    vals = [e.value for e in sw.estimates]
    assert vals == sorted(vals, reverse=True)


def test_fit_log_linear_exact():
    ns = [1, 2, 3, 4]
    slope, intercept, r2 = fit_log_linear(ns, [math.exp(-0.7 * n + 0.1) for n in ns])
    assert slope == pytest.approx(-0.7)
    assert intercept == pytest.approx(0.1)
    assert r2 == pytest.approx(1.0)


def test_decay_fit_excludes_zeros():
    fit = decay_fit("theta", 2, 2, 1.0, [2, 4, 40], 300, 1)
    assert 40 in fit.excluded
    assert fit.rate > 0


def test_pc_bracket_is_heuristic():
    res = pc_bracket(2, 4, [2], 0.05, 300, 1)
    assert res["heuristic"] is True
    assert res["drift"] == 0
    with pytest.raises(DomainError):
        pc_bracket(2, 4, [4, 2], 0.05, 300, 1)


def test_argument_checks():
    with pytest.raises(DomainError):
        estimate_event("gamma", 2, 3, 3, 0.5, 10, 1)
    with pytest.raises(DomainError):
        estimate_event("tau", 2, 5, 3, 0.5, 10, 1)
    with pytest.raises(DomainError):
        estimate_event("tau", 2, 3, 3, 1.5, 10, 1)
    with pytest.raises(DomainError):
        sweep_p("tau", 2, 3, 3, [0.5, 0.4], 10, 1)
    with pytest.raises(BudgetError):
        estimate_event("tau", 2, 3, 100, 0.5, 10**6, 1)


def test_certificate_failures_non_increasing_in_margin():
    rates = [estimate_event("tau", 2, 3, 3, 0.6, 400, 17, margin=m).certificate_failure_rate
             for m in range(7)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    assert rates[0] > rates[-1]


def test_lower_cap_crosses_later():
    # fewer allowed open edges per vertex needs a larger p for the same theta
    b3 = pc_bracket(2, 3, [3], 0.02, 3000, 5)["per_n"][0]["crossing"]
    b4 = pc_bracket(2, 4, [3], 0.02, 3000, 5)["per_n"][0]["crossing"]
    assert b3 > b4
