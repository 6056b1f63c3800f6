from hypothesis import given
from hypothesis import strategies as st

from cdplab.dynamics import evolve, sample_clock
from cdplab.events import tau_indicator, theta_indicator
from cdplab.lattice import box
from cdplab.local import LocalClock, evaluate_pair


@given(st.integers(2, 3), st.integers(2, 6), st.integers(0, 2**62),
       st.sampled_from([0.0, 0.2, 0.45, 0.6, 0.9, 1.0]), st.data())
def test_lazy_equals_eager(d, R, seed, p, data):
    if d == 3:
        R = min(R, 3)
    kappa = data.draw(st.integers(2, 2 * d))
    n = data.draw(st.integers(1, R))
    th, ta, _ = evaluate_pair(d, R, seed, p, kappa, n)
    c = sample_clock(box(d, R), seed)
    assert th == theta_indicator(c, p, kappa, n)
    assert ta == tau_indicator(c, p, kappa, n)


@given(st.integers(2, 5), st.integers(0, 2**62), st.floats(0, 1), st.integers(2, 4))
def test_lazy_edge_states(R, seed, p, kappa):
    reg = box(2, R)
    clock = sample_clock(reg, seed)
    conf = evolve(clock, p, kappa)
    lc = LocalClock(2, R, seed, p, kappa)
    for j, (a, b) in enumerate(reg.edges):
        axis = reg.axis[j]
        assert lc.is_open((a, axis)) == bool(conf.open[j])
        assert lc.u((a, axis)) == clock.value(j)


def test_certificate_flags_boundary_contact():
    # at p = 1 with a binding cap the dependence chains reach the sphere
    lc = LocalClock(2, 2, 3, 1.0, 2)
    for v in box(2, 2).vertices:
        for key, _ in lc.incident(v):
            lc.is_open(key)
    assert not lc.certified
    lc = LocalClock(2, 4, 3, 0.05, 3)
    assert lc.certified
