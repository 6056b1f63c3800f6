from collections import deque

import pytest
from conftest import chain_clock, star_clock
from hypothesis import given
from hypothesis import strategies as st

from cdplab.dynamics import evolve, sample_clock
from cdplab.events import (
    decreasing_reach,
    head_set,
    modified_one_arm,
    standard_one_arm,
    tau_indicator,
    theta_indicator,
)
from cdplab.lattice import DomainError, box, norm1, sphere
from cdplab.verify import _dfs_reach


def test_head_set_examples():
    reg = box(2, 2)
    none_open = evolve(sample_clock(reg, 1), 0.0, 3)
    assert head_set(none_open, 2) == sphere(2, reg)
    one = evolve(star_clock(0.1, 0.7, 0.8, 0.9), 0.5, 3)
    assert head_set(one, 1) == sphere(1, box(2, 1)) | {(0, 0)}
    full = evolve(sample_clock(reg, 1), 1.0, 4)
    assert head_set(full, 2) == set(reg.vertices)


def test_decreasing_reach_chain():
    c2 = chain_clock(0.3, 0.2)
    r = decreasing_reach(c2, 0.5, targets=[(0, 0), (1, 0), (2, 0)])
    assert r == {(0, 0): True, (1, 0): True, (2, 0): False}
    c2b = chain_clock(0.2, 0.3)
    r = decreasing_reach(c2b, 0.5, targets=[(1, 0), (2, 0)])
    assert r == {(1, 0): True, (2, 0): True}


@pytest.mark.parametrize("kappa", [2, 3, 4])
def test_star_tau(kappa):
    assert modified_one_arm(star_clock(0.6, 0.7, 0.8, 0.45), 0.5, kappa, 1)[0]
    assert not modified_one_arm(star_clock(0.6, 0.7, 0.8, 0.9), 0.5, kappa, 1)[0]


def test_all_late_clock_fails():
    reg = box(2, 3)
    c = sample_clock(reg, 4)
    assert not tau_indicator(c, float(c.u.min()) / 2, 3, 2)


@pytest.mark.parametrize("d,R", [(2, 1), (2, 2), (2, 3), (3, 2)])
def test_bernoulli_p_one_always_occurs(d, R):
    for s in range(20):
        c = sample_clock(box(d, R), s)
        for n in range(1, R + 1):
            assert modified_one_arm(c, 1.0, 2 * d, n)[0]


def test_standard_one_arm_examples():
    reg = box(2, 2)
    assert not standard_one_arm(evolve(sample_clock(reg, 1), 0.0, 3), 1)
    assert standard_one_arm(evolve(star_clock(0.1, 0.7, 0.8, 0.9), 0.5, 3), 1)


def _bfs_reaches(reg, is_open, n):
    seen = {reg.origin}
    q = deque(seen)
    while q:
        v = q.popleft()
        if reg.norm[v] == n:
            return True
        for j in reg.incident[v]:
            w = reg.other_end(j, v)
            if is_open[j] and w not in seen and reg.norm[w] <= n:
                seen.add(w)
                q.append(w)
    return False


@given(st.integers(1, 5), st.integers(0, 2**62), st.floats(0, 1), st.data())
def test_bernoulli_connectivity(R, seed, p, data):
    n = data.draw(st.integers(1, R))
    reg = box(2, R)
    c = sample_clock(reg, seed)
    conf = evolve(c, p, 4)
    assert standard_one_arm(conf, n) == _bfs_reaches(reg, c.u <= p, n)


cases = st.tuples(st.integers(2, 3), st.integers(1, 4), st.integers(0, 2**62),
                  st.floats(0, 1), st.data())


@given(cases)
def test_witness_and_domination(args):
    d, R, seed, p, data = args
    if d == 3:
        R = min(R, 2)
    kappa = data.draw(st.integers(2, 2 * d))
    n = data.draw(st.integers(1, R))
    c = sample_clock(box(d, R), seed)
    conf = evolve(c, p, kappa)
    occurs, wit = modified_one_arm(c, p, kappa, n)
    if occurs:
        wit.check(c, p, kappa, n, conf)
    else:
        assert wit is None
    assert (not standard_one_arm(conf, n)) or occurs


@given(cases)
def test_monotone_in_p_and_n(args):
    d, R, seed, p, data = args
    if d == 3:
        R = min(R, 2)
    kappa = data.draw(st.integers(2, 2 * d))
    n = data.draw(st.integers(1, R))
    q = data.draw(st.floats(p, 1))
    c = sample_clock(box(d, R), seed)
    t = tau_indicator(c, p, kappa, n)
    assert (not t) or tau_indicator(c, q, kappa, n)
    if n > 1:
        assert (not t) or tau_indicator(c, p, kappa, n - 1)
    # open edges never close, so theta is monotone as well
    assert (not theta_indicator(c, p, kappa, n)) or theta_indicator(c, q, kappa, n)


@given(st.integers(1, 4), st.integers(0, 2**62), st.floats(0, 1), st.data())
def test_reach_dp_matches_path_enumeration(R, seed, p, data):
    n = data.draw(st.integers(1, R))
    reg = box(2, R)
    c = sample_clock(reg, seed)
    dp = decreasing_reach(c, p, n=n)
    brute = _dfs_reach(c, p, n)
    assert {v for v, ok in dp.items() if ok and norm1(v) <= n} == \
        {reg.vertices[i] for i in brute}


def test_bad_radius():
    c = sample_clock(box(2, 2), 1)
    with pytest.raises(DomainError):
        modified_one_arm(c, 0.5, 3, 3)
    with pytest.raises(DomainError):
        modified_one_arm(c, 0.5, 3, 0)
