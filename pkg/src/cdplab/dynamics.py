"""Clock fields and the degree-capped opening dynamics.

Every edge attempts to open once, at its clock time, and succeeds iff both
endpoints have fewer than ``kappa`` open edges at that moment.  There are no
retries, so a single pass over the edges in increasing clock order is exact.
"""

from collections import namedtuple

import numpy as np

from . import rng
from .lattice import DomainError


class ClockField:
    """Distinct clock values, one per edge of ``region``.

    Values produced by :func:`sample_clock` lie in the open interval (0, 1);
    perturbed clocks may carry the endpoint values 0 or 1.
    """

    __slots__ = ("region", "u", "seed", "_order", "_ulist")

    def __init__(self, region, u, seed=None, check=True):
        u = np.array(u, dtype=np.float64)
        if u.shape != (region.num_edges,):
            raise DomainError(f"expected {region.num_edges} clock values, got {u.shape}")
        if check:
            if u.size and (u.min() < 0.0 or u.max() > 1.0):
                raise DomainError("clock values must lie in [0, 1]")
            if np.unique(u).size != u.size:
                raise DomainError("clock values must be pairwise distinct")
        u.flags.writeable = False
        self.region = region
        self.u = u
        self.seed = seed
        self._order = None
        self._ulist = None

    def __repr__(self):
        return f"ClockField({self.region!r}, seed={self.seed})"

    def __eq__(self, other):
        return (
            isinstance(other, ClockField)
            and self.region == other.region
            and np.array_equal(self.u, other.u)
        )

    __hash__ = None

    @property
    def order(self):
        """Edge ids sorted by increasing clock value."""
        if self._order is None:
            self._order = np.argsort(self.u, kind="stable").tolist()
        return self._order

    @property
    def ulist(self):
        if self._ulist is None:
            self._ulist = self.u.tolist()
        return self._ulist

    def value(self, e):
        return float(self.u[self.region.eid(e)])

    def as_dict(self):
        return {e: float(x) for e, x in zip(self.region.edges, self.u)}


def sample_clock(region, seed):
    """Sample a clock field deterministically from ``seed``.

    Each value is a hash of the seed and the edge's lattice position, so the
    same edge gets the same value in every region that contains it.  Exact
    collisions are re-drawn for the later canonical edge.
    """
    if region.num_edges == 0:
        return ClockField(region, np.empty(0), seed=seed)
    lows, axes = region.edge_lows()
    u = rng.edge_uniform_np(seed, lows, axes)
    redraw = np.zeros(len(u), dtype=np.int64)
    while True:
        order = np.argsort(u, kind="stable")
        su = u[order]
        dup = np.nonzero(su[1:] == su[:-1])[0]
        if dup.size == 0:
            break
        for k in dup:
            j = max(order[k], order[k + 1])
            redraw[j] += 1
            u[j] = rng.edge_uniform(seed, lows[j].tolist(), int(axes[j]), int(redraw[j]))
    return ClockField(region, u, seed=seed, check=False)


def clock_from_values(region, values, seed=None):
    """Build a clock from a dict ``{edge: value}`` or a sequence indexed by edge id."""
    if isinstance(values, dict):
        u = np.full(region.num_edges, np.nan)
        for e, x in values.items():
            u[region.eid(e)] = x
        if np.isnan(u).any():
            raise DomainError("every region edge needs a clock value")
    else:
        u = values
    return ClockField(region, u, seed=seed)


class Configuration:
    """The state omega_p(U): which edges are open at time ``p``."""

    __slots__ = ("region", "p", "kappa", "open", "degree", "clock")

    def __init__(self, region, p, kappa, open_, degree, clock=None):
        self.region = region
        self.p = p
        self.kappa = kappa
        self.open = np.frombuffer(bytes(open_), dtype=np.uint8) if not isinstance(
            open_, np.ndarray) else open_
        self.degree = np.asarray(degree, dtype=np.int64)
        self.clock = clock

    def __eq__(self, other):
        return isinstance(other, Configuration) and np.array_equal(self.open, other.open)

    __hash__ = None

    def is_open(self, e):
        return bool(self.open[self.region.eid(e)])

    def open_edges(self):
        return {self.region.edges[j] for j in np.flatnonzero(self.open)}

    def check_invariants(self):
        """Raise AssertionError if any configuration invariant fails."""
        reg = self.region
        deg = np.zeros(reg.num_vertices, dtype=np.int64)
        for j in np.flatnonzero(self.open):
            deg[reg.ea[j]] += 1
            deg[reg.eb[j]] += 1
        assert np.array_equal(deg, self.degree), "degree table out of sync"
        assert deg.max(initial=0) <= self.kappa, "degree cap exceeded"
        if self.clock is not None:
            u = self.clock.u
            for j in range(reg.num_edges):
                if u[j] <= self.p and not self.open[j]:
                    assert max(deg[reg.ea[j]], deg[reg.eb[j]]) == self.kappa, (
                        f"edge {reg.edges[j]} rejected without a saturated endpoint"
                    )
                if self.open[j]:
                    assert u[j] <= self.p, "open edge above threshold"


def _check_kappa(region, kappa):
    if int(kappa) != kappa or not 2 <= kappa <= 2 * region.d:
        raise DomainError(f"kappa must be an integer in [2, {2 * region.d}], got {kappa}")


def _sweep(region, u, order, p, kappa):
    ea, eb = region.ea, region.eb
    deg = [0] * region.num_vertices
    is_open = bytearray(region.num_edges)
    for j in order:
        if u[j] > p:
            break
        a = ea[j]
        b = eb[j]
        if deg[a] < kappa and deg[b] < kappa:
            is_open[j] = 1
            deg[a] += 1
            deg[b] += 1
    return is_open, deg


def evolve(clock, p, kappa):
    """Return omega_p(U) for the clock restricted to its region."""
    region = clock.region
    _check_kappa(region, kappa)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    is_open, deg = _sweep(region, clock.ulist, clock.order, p, kappa)
    return Configuration(region, p, kappa, np.frombuffer(is_open, dtype=np.uint8).copy(),
                         deg, clock)


def open_ids(clock, p, kappa):
    """Fast path of :func:`evolve`: the open flags as a bytearray."""
    return _sweep(clock.region, clock.ulist, clock.order, p, kappa)[0]


TrajectoryEntry = namedtuple("TrajectoryEntry", "time edge accepted")


def trajectory(clock, kappa):
    """Every opening attempt up to time 1, in time order."""
    region = clock.region
    _check_kappa(region, kappa)
    u = clock.ulist
    ea, eb = region.ea, region.eb
    deg = [0] * region.num_vertices
    out = []
    for j in clock.order:
        a, b = ea[j], eb[j]
        ok = deg[a] < kappa and deg[b] < kappa
        if ok:
            deg[a] += 1
            deg[b] += 1
        out.append(TrajectoryEntry(u[j], region.edges[j], ok))
    return out


def replay(entries, region, p, kappa):
    """Rebuild a Configuration from a trajectory prefix (times <= p)."""
    is_open = np.zeros(region.num_edges, dtype=np.uint8)
    deg = np.zeros(region.num_vertices, dtype=np.int64)
    for t, e, ok in entries:
        if t > p:
            break
        if ok:
            j = region.eid(e)
            is_open[j] = 1
            deg[region.ea[j]] += 1
            deg[region.eb[j]] += 1
    return Configuration(region, p, kappa, is_open, deg)


def closure_ids(clock, seeds):
    """Dependence closure of a set of edge ids (ids, not edges)."""
    region = clock.region
    u = clock.ulist
    adj = region.adjacent_edges
    seen = set(seeds)
    stack = list(seen)
    while stack:
        f = stack.pop()
        uf = u[f]
        for g in adj[f]:
            if u[g] < uf and g not in seen:
                seen.add(g)
                stack.append(g)
    return seen


def dependence_closure(clock, e):
    """Smallest edge set containing ``e`` and closed under "adjacent and earlier".

    The whole history of ``e`` is a function of the clock on this set.
    """
    region = clock.region
    return {region.edges[j] for j in closure_ids(clock, [region.eid(e)])}


def states_on(clock, edge_ids, p, kappa):
    """Open flags at time p for the edges of a closure-closed id set."""
    region = clock.region
    u = clock.ulist
    ea, eb = region.ea, region.eb
    deg = {}
    out = {}
    for j in sorted(edge_ids, key=u.__getitem__):
        if u[j] > p:
            out[j] = 0
            continue
        a, b = ea[j], eb[j]
        if deg.get(a, 0) < kappa and deg.get(b, 0) < kappa:
            out[j] = 1
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        else:
            out[j] = 0
    return out


def determination_certificate(clock, inner_radius):
    """True iff no inner-ball edge depends on an edge touching the outer sphere.

    When true, every edge with both endpoints in the ball of radius
    ``inner_radius`` has the same history as in infinite volume.
    """
    region = clock.region
    if not 0 <= inner_radius <= region.R:
        raise DomainError(f"inner radius {inner_radius} outside [0, {region.R}]")
    norm = region.norm
    inner = [j for j in range(region.num_edges)
             if norm[region.ea[j]] <= inner_radius and norm[region.eb[j]] <= inner_radius]
    touches = region.touches_outer
    return not any(touches[j] for j in closure_ids(clock, inner))
