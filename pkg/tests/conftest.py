import os

import pytest
from hypothesis import HealthCheck, settings

from cdplab.dynamics import clock_from_values
from cdplab.lattice import box, canonical_edge

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

O = (0, 0)
# star edges e1..e4 towards +x, +y, -x, -y
STAR = [canonical_edge(O, v) for v in ((1, 0), (0, 1), (-1, 0), (0, -1))]


def star_clock(u1, u2, u3, u4):
    return clock_from_values(box(2, 1), dict(zip(STAR, (u1, u2, u3, u4))))


def chain_clock(u0a=0.3, uab=0.2, R=2, rest=0.95):
    """C2: edges 0a (a=(1,0)) and ab (b=(2,0)); every other edge late."""
    reg = box(2, R)
    vals = {e: rest + (1 - rest) * 0.5 * (j + 1) / reg.num_edges for j, e in enumerate(reg.edges)}
    vals[(O, (1, 0))] = u0a
    vals[((1, 0), (2, 0))] = uab
    return clock_from_values(reg, vals)


@pytest.fixture
def s4():
    return star_clock(0.1, 0.2, 0.3, 0.4)
