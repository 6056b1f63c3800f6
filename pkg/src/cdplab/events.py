"""One-arm events: the standard one and the modified (head/tail) one.

The modified event asks for a path from the sphere of radius ``n`` to the
origin whose first part (head) is open at time ``p`` and whose remainder
(tail) has strictly decreasing clock values, the first of them ``<= p``.
All vertices after the starting one must have norm ``< n``.
"""

from collections import deque
from dataclasses import dataclass

from .dynamics import evolve, open_ids
from .lattice import DomainError


@dataclass(frozen=True)
class WitnessPath:
    """A path ``x_0 .. x_k`` witnessing the modified one-arm event.

    ``vertices[:split + 1]`` is the open head and ``vertices[split:]`` the
    decreasing tail.
    """

    vertices: tuple
    split: int

    @property
    def head(self):
        return self.vertices[: self.split + 1]

    @property
    def tail(self):
        return self.vertices[self.split:]

    def check(self, clock, p, kappa, n, config=None):
        """Assert every witness invariant against ``clock``."""
        region = clock.region
        vs = self.vertices
        k = len(vs) - 1
        assert 0 <= self.split <= k
        assert len(set(vs)) == len(vs), "witness revisits a vertex"
        ids = [region.vid(v) for v in vs]
        assert region.norm[ids[0]] == n, "witness does not start on the sphere"
        assert all(region.norm[i] < n for i in ids[1:]), "witness leaves the interior"
        assert ids[-1] == region.origin, "witness does not end at the origin"
        if config is None:
            config = evolve(clock, p, kappa)
        edges = [region.eid((vs[i], vs[i + 1])) for i in range(k)]
        assert all(config.open[j] for j in edges[: self.split]), "head edge closed"
        tail = [clock.u[j] for j in edges[self.split:]]
        if tail:
            assert tail[0] <= p, "tail starts above p"
            assert all(x > y for x, y in zip(tail, tail[1:])), "tail not decreasing"


def _check_n(region, n, low=1):
    if int(n) != n or not low <= n <= region.R:
        raise DomainError(f"n must be an integer in [{low}, {region.R}], got {n}")


def head_search(region, n, is_open):
    """Breadth-first search from the sphere of radius n through open edges.

    Only vertices of norm < n are entered.  Returns ``(order, parent)`` where
    ``parent[v]`` is ``(previous vertex, edge id)`` or ``None`` for roots.
    """
    norm = region.norm
    parent = {}
    order = []
    q = deque()
    for s in region.sphere_ids(n):
        parent[s] = None
        order.append(s)
        q.append(s)
    inc = region.incident
    ea, eb = region.ea, region.eb
    while q:
        v = q.popleft()
        for j in inc[v]:
            if is_open[j]:
                w = eb[j] if ea[j] == v else ea[j]
                if norm[w] < n and w not in parent:
                    parent[w] = (v, j)
                    order.append(w)
                    q.append(w)
    return order, parent


def tail_search(region, n, u, order, p, usable=None):
    """Vertices joined to the origin by a decreasing path, with back-pointers.

    Directed-edge dynamic program: sweep edges in increasing clock order; an
    edge extends a decreasing path when its inner endpoint is already reached
    and lies strictly inside the sphere of radius n.  Returns a dict
    ``vertex -> edge id`` (``None`` for the origin).
    """
    norm = region.norm
    ea, eb = region.ea, region.eb
    back = {region.origin: None}
    for j in order:
        if u[j] > p:
            break
        if usable is not None and not usable[j]:
            continue
        a, b = ea[j], eb[j]
        ra, rb = a in back, b in back
        if ra == rb:
            continue
        if rb and norm[b] < n:
            back[a] = j
        elif ra and norm[a] < n:
            back[b] = j
    return back


def _tail_walk(region, back, v):
    path = [v]
    while back[v] is not None:
        v = region.other_end(back[v], v)
        path.append(v)
    return path


def find_witness(region, n, is_open, u, order, p, usable=None):
    """Vertex-id witness ``(ids, split)`` or ``None``; the shared core of the event."""
    horder, parent = head_search(region, n, is_open)
    back = tail_search(region, n, u, order, p, usable)
    norm = region.norm
    for v in horder:
        if v in back and norm[v] <= n:
            break
    else:
        return None
    head = [v]
    while parent[head[-1]] is not None:
        head.append(parent[head[-1]][0])
    head.reverse()
    tail = _tail_walk(region, back, v)
    pos = {x: i for i, x in enumerate(tail)}
    for i, x in enumerate(head):
        if x in pos:
            return head[:i] + tail[pos[x]:], i
    raise AssertionError("unreachable: head ends on the tail")


def head_set(config, n):
    """Vertices reachable from the sphere of radius n along open edges, staying inside."""
    region = config.region
    _check_n(region, n, low=0)
    order, _ = head_search(region, n, config.open)
    return {region.vertices[i] for i in order}


def decreasing_reach(clock, p, targets=None, n=None):
    """Map each target vertex to whether a decreasing path leads it to the origin.

    With ``targets=None`` every vertex of norm ``<= n`` is reported.
    """
    region = clock.region
    if n is None:
        n = region.R
    back = tail_search(region, n, clock.ulist, clock.order, p)
    if targets is None:
        targets = [v for v, nv in zip(region.vertices, region.norm) if nv <= n]
    return {tuple(v): region.vid(v) in back for v in targets}


def modified_one_arm(clock, p, kappa, n):
    """Decide the modified one-arm event; returns ``(occurs, WitnessPath or None)``."""
    region = clock.region
    _check_n(region, n)
    is_open = open_ids(clock, p, kappa)
    found = find_witness(region, n, is_open, clock.ulist, clock.order, p)
    if found is None:
        return False, None
    ids, split = found
    return True, WitnessPath(tuple(region.vertices[i] for i in ids), split)


def tau_indicator(clock, p, kappa, n):
    """Indicator of the modified one-arm event, without building a witness."""
    region = clock.region
    is_open = open_ids(clock, p, kappa)
    horder, _ = head_search(region, n, is_open)
    back = tail_search(region, n, clock.ulist, clock.order, p)
    return any(v in back for v in horder)


def standard_one_arm(config, n):
    """True iff the origin is joined to the sphere of radius n by open edges.

    The search is confined to the closed ball of radius n: a path reaching the
    sphere can be cut at its first visit.
    """
    region = config.region
    _check_n(region, n, low=0)
    return theta_from_open(region, n, config.open)


def theta_from_open(region, n, is_open):
    if n == 0:
        return True
    norm = region.norm
    inc = region.incident
    ea, eb = region.ea, region.eb
    seen = {region.origin}
    stack = [region.origin]
    while stack:
        v = stack.pop()
        for j in inc[v]:
            if is_open[j]:
                w = eb[j] if ea[j] == v else ea[j]
                if w not in seen and norm[w] <= n:
                    if norm[w] == n:
                        return True
                    seen.add(w)
                    stack.append(w)
    return False


def theta_indicator(clock, p, kappa, n):
    return theta_from_open(clock.region, n, open_ids(clock, p, kappa))
