"""Exact sweep over ordered prefixes: the scalable oracle engine.

An arrangement with ``k`` edges below p is a sequence of ``k`` distinct
edges.  Running the dynamics along that sequence only ever appends a new
latest edge, so a small state (open edges, decreasing reach, ...) can be
updated one edge at a time and sequences sharing ``(processed set, state)``
merge.  Counts are exact Python integers.

For the one-arm events the event, once it holds, keeps holding when later
edges are appended: the new edge is tried last and cannot close anything
earlier, and the decreasing reach only grows.  Such states are absorbed
into a single sink whose descendants are counted in closed form.

Each event is a small state machine with ``start()``, ``step(state, edge)``
and ``value(state)``; :data:`TRUE` is the absorbing sink.
"""

import math
from collections import defaultdict

from ..lattice import DomainError

TRUE = "T"


class Geometry:
    """Bitmask tables of a region for a fixed radius ``n``."""

    def __init__(self, region, n):
        if not 1 <= n <= region.R:
            raise DomainError(f"n must be in [1, {region.R}], got {n}")
        self.region = region
        self.n = n
        self.m = region.num_edges
        self.ea = region.ea
        self.eb = region.eb
        self.norm = region.norm
        self.origin = region.origin
        self.incm = [sum(1 << j for j in inc) for inc in region.incident]
        self.sphere = [sum(1 << i for i in region.sphere_ids(r)) for r in range(region.R + 1)]
        self.inner = sum(1 << i for i, nv in enumerate(region.norm) if nv < n)
        self.ball = sum(1 << i for i, nv in enumerate(region.norm) if nv <= n)
        # edges usable by the head: one endpoint strictly inside
        self.head_ok = [min(region.norm[a], region.norm[b]) < n
                        for a, b in zip(region.ea, region.eb)]

    def open_after(self, O, j, kappa):
        a, b = self.ea[j], self.eb[j]
        if (O & self.incm[a]).bit_count() < kappa and (O & self.incm[b]).bit_count() < kappa:
            return O | (1 << j)
        return O

    def grow(self, G, j, limit=None):
        """Ascending reach after appending edge ``j``; ``limit`` masks vertices allowed to extend."""
        a, b = self.ea[j], self.eb[j]
        ok = G if limit is None else G & limit
        if ok >> a & 1:
            G |= 1 << b
        if ok >> b & 1:
            G |= 1 << a
        return G

    def component(self, seeds, O, allowed):
        """Vertices joined to ``seeds`` by open edges with ``allowed[j]`` true."""
        ea, eb = self.ea, self.eb
        edges = [j for j in _bits(O) if allowed[j]]
        R = seeds
        changed = True
        while changed:
            changed = False
            for j in edges:
                a, b = ea[j], eb[j]
                ia, ib = R >> a & 1, R >> b & 1
                if ia != ib:
                    R |= (1 << a) | (1 << b)
                    changed = True
        return R


def _bits(x):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


class TauMachine:
    """Modified one-arm event: state ``(open edges, decreasing reach of 0)``."""

    def __init__(self, geo, kappa):
        self.geo = geo
        self.kappa = kappa
        self._head = {}
        self._inner = geo.inner
        self._n_sphere = geo.sphere[geo.n]

    def start(self):
        return (0, 1 << self.geo.origin)

    def head(self, O):
        h = self._head.get(O)
        if h is None:
            geo = self.geo
            inner = self._inner
            H = self._n_sphere
            edges = [j for j in _bits(O)]
            changed = True
            while changed:
                changed = False
                for j in edges:
                    a, b = geo.ea[j], geo.eb[j]
                    if H >> a & 1 and not H >> b & 1 and inner >> b & 1:
                        H |= 1 << b
                        changed = True
                    elif H >> b & 1 and not H >> a & 1 and inner >> a & 1:
                        H |= 1 << a
                        changed = True
            self._head[O] = h = H
        return h

    def step(self, s, j):
        if s is TRUE:
            return TRUE
        O, D = s
        O = self.geo.open_after(O, j, self.kappa)
        D = self.geo.grow(D, j, self._inner)
        if self.head(O) & D:
            return TRUE
        return (O, D)

    @staticmethod
    def value(s):
        return s is TRUE


class ThetaMachine:
    """Standard one-arm event inside the ball of radius n."""

    def __init__(self, geo, kappa):
        self.geo = geo
        self.kappa = kappa
        self._all = [True] * geo.m
        self._ball_edges = [geo.ball >> a & 1 and geo.ball >> b & 1
                            for a, b in zip(geo.ea, geo.eb)]

    def start(self):
        return 0

    def step(self, s, j):
        if s is TRUE:
            return TRUE
        O = self.geo.open_after(s, j, self.kappa)
        if O != s and self._ball_edges[j]:
            comp = self.geo.component(1 << self.geo.origin, O, self._ball_edges)
            if comp & self.geo.sphere[self.geo.n]:
                return TRUE
        return O

    @staticmethod
    def value(s):
        return s is TRUE


def machine_for(event, region, kappa, n):
    geo = Geometry(region, n)
    if event == "tau":
        return TauMachine(geo, kappa)
    if event == "theta":
        return ThetaMachine(geo, kappa)
    raise DomainError(f"unknown event {event!r}")


def sweep_event(machine, items):
    """Event counts and per-edge p-pivotal counts in one pass.

    Returns ``(counts, pivotal)`` where ``counts[k]`` counts sequences of
    length ``k`` on which the event holds, and ``pivotal[j][k]`` counts
    sequences of length ``k`` avoiding ``j`` on which appending ``j`` turns
    the event on (``j`` is then p-pivotal once its clock is moved to p).
    """
    m = len(items)
    pos = {j: i for i, j in enumerate(items)}
    absorbed = [0] * (m + 1)
    pivotal = {j: [0] * m for j in items}
    start = machine.start()
    if start is TRUE:
        absorbed[0] = 1
        layer = {}
    else:
        layer = {(0, start): 1}
    step = machine.step
    for k in range(m):
        new = defaultdict(int)
        for (mask, s), c in layer.items():
            for j in items:
                b = 1 << pos[j]
                if mask & b:
                    continue
                t = step(s, j)
                if t is TRUE:
                    absorbed[k + 1] += c
                    pivotal[j][k] += c
                else:
                    new[(mask | b, t)] += c
        layer = new
    counts = [sum(absorbed[i] * math.perm(m - i, k - i) for i in range(k + 1))
              for k in range(m + 1)]
    return counts, pivotal


def sweep_pair(machine, items, e):
    """Counts of ``f(U) != f(U^e)`` with ``u(e)`` resampled.

    Both clock values of ``e`` are treated as two extra iid items, giving
    ``len(items) + 1`` items in total.
    """
    others = [j for j in items if j != e]
    m = len(others) + 2
    pos = {j: i for i, j in enumerate(others)}
    E1, E2 = 1 << len(others), 1 << (len(others) + 1)
    counts = [0] * (m + 1)
    s0 = machine.start()
    layer = {(0, s0, s0): 1}
    step = machine.step
    val = machine.value
    for k in range(m):
        new = defaultdict(int)
        for (mask, s1, s2), c in layer.items():
            for j in others:
                b = 1 << pos[j]
                if mask & b:
                    continue
                t1, t2 = step(s1, j), step(s2, j)
                if t1 is TRUE and t2 is TRUE:
                    continue
                new[(mask | b, t1, t2)] += c
            if not mask & E1:
                t1 = step(s1, e)
                if not (t1 is TRUE and s2 is TRUE):
                    new[(mask | E1, t1, s2)] += c
            if not mask & E2:
                t2 = step(s2, e)
                if not (s1 is TRUE and t2 is TRUE):
                    new[(mask | E2, s1, t2)] += c
        layer = new
        counts[k + 1] = sum(c for (_, s1, s2), c in layer.items() if val(s1) != val(s2))
    return counts


def sweep_u_pivotal(machine, items, e):
    """Counts of arrangements of the other edges on which some value of ``u(e)`` flips the event."""
    others = [j for j in items if j != e]
    m = len(others)
    pos = {j: i for i, j in enumerate(others)}
    step = machine.step
    val = machine.value

    def norm(s, F):
        # placements that reached the sink collapse into one flag
        live = frozenset(t for t in F if t is not TRUE)
        return s, live, any(t is TRUE for t in F)

    s0 = machine.start()
    layer = {(0,) + norm(s0, [step(s0, e)]): 1}
    counts = [0] * (m + 1)

    def pivotal(s, live, has_true):
        return bool(live) if s is TRUE else (has_true or any(val(t) for t in live))

    counts[0] = sum(c for (_, s, live, ht), c in layer.items() if pivotal(s, live, ht))
    for k in range(m):
        new = defaultdict(int)
        for (mask, s, live, ht), c in layer.items():
            for j in others:
                b = 1 << pos[j]
                if mask & b:
                    continue
                s2 = step(s, j)
                F = [step(t, j) for t in live]
                F.append(step(s2, e))
                if ht:
                    F.append(TRUE)
                s2, live2, ht2 = norm(s2, F)
                if s2 is TRUE and not live2:
                    continue
                new[(mask | b, s2, live2, ht2)] += c
        layer = new
        counts[k + 1] = sum(c for (_, s, live, ht), c in layer.items() if pivotal(s, live, ht))
    return counts


def sweep_revealment(geo, kappa, items, e):
    """Per-r counts of arrangements on which algorithm A_r reveals edge ``e``.

    The final state of A_r has a closed form.  Let ``DR(Y)`` be the vertices
    reached from ``Y`` by decreasing paths.  Rule (4) fires iff
    ``0 in DR(boundary_r)``; the explored vertex set ``R`` is the open
    cluster of ``boundary_r`` (plus ``boundary_n`` if rule (4) fired) through
    edges with an endpoint of norm ``< n``; the revealed edges are those
    incident to ``DR(R)``.  So ``e = xy`` is revealed iff some vertex of
    ``R`` reaches ``x`` or ``y`` by a decreasing path, i.e. iff the
    ascending reach of ``{x, y}`` meets ``R``.
    """
    n = geo.n
    m = len(items)
    pos = {j: i for i, j in enumerate(items)}
    spheres = [geo.sphere[r] for r in range(n + 1)]
    all_r = [r for r in range(1, n + 1)]
    seed_e = (1 << geo.ea[e]) | (1 << geo.eb[e])
    comp_cache = {}

    def explored(O, r, z):
        key = (O, r, z)
        R = comp_cache.get(key)
        if R is None:
            seeds = spheres[r] | (spheres[n] if z else 0)
            R = geo.component(seeds, O, geo.head_ok)
            comp_cache[key] = R
        return R

    def full(G):
        return all(G & spheres[r] for r in all_r)

    def g0_done(G):
        return all(G & spheres[r] for r in range(1, n))

    FULL = "F"
    absorbed = [0] * (m + 1)
    counts = {r: [0] * (m + 1) for r in all_r}
    G0 = 1 << geo.origin
    layer = {}
    if full(seed_e):
        absorbed[0] = 1
    else:
        layer[(0, 0, seed_e, G0)] = 1

    def score(O, Ge, G0, k, c):
        for r in all_r:
            z = bool(G0 & spheres[r])
            if Ge & explored(O, r, z):
                counts[r][k] += c

    for (mask, O, Ge, G), c in layer.items():
        score(O, Ge, G, 0, c)
    for k in range(m):
        new = defaultdict(int)
        for (mask, O, Ge, G), c in layer.items():
            for j in items:
                b = 1 << pos[j]
                if mask & b:
                    continue
                Ge2 = geo.grow(Ge, j)
                if full(Ge2):
                    absorbed[k + 1] += c
                    continue
                O2 = geo.open_after(O, j, kappa)
                G2 = G if G is FULL else geo.grow(G, j)
                if G2 is not FULL and g0_done(G2):
                    G2 = FULL
                new[(mask | b, O2, Ge2, G2)] += c
        layer = new
        for (mask, O, Ge, G), c in layer.items():
            if G is FULL:
                for r in all_r:
                    if Ge & explored(O, r, True):
                        counts[r][k + 1] += c
            else:
                score(O, Ge, G, k + 1, c)
    for r in all_r:
        for k in range(m + 1):
            counts[r][k] += sum(absorbed[i] * math.perm(m - i, k - i) for i in range(k + 1))
    return counts
