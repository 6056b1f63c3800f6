"""Pivotal edges of the modified one-arm event and switching paths.

Moving one clock value from 1 down to 0 flips the state of every edge along
a single alternating path (possibly closing into an even cycle) and nothing
else.  :func:`switching_path` builds that path from the two perturbed
configurations and checks its structure on every call in test runs.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from . import rng
from .dynamics import ClockField, open_ids, sample_clock
from .events import tau_indicator
from .lattice import DomainError


class SwitchingPathError(AssertionError):
    """The perturbed configurations do not differ along an alternating path."""


# checked on every construction unless CDP_LAB_PROFILE=release
_RELEASE = os.environ.get("CDP_LAB_PROFILE", "").lower() == "release"


def perturb_clock(clock, e, value):
    """Copy of ``clock`` with the value of edge ``e`` replaced.

    A collision with another edge's value is resolved by stepping to the
    next representable float below it (above it when ``value`` is 0).
    """
    region = clock.region
    j = region.eid(e)
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"clock value must lie in [0, 1], got {value}")
    u = clock.u.copy()
    others = set(np.delete(u, j).tolist())
    v = float(value)
    direction = 1.0 if v == 0.0 else -1.0
    while v in others:
        v = float(np.nextafter(v, direction * np.inf))
    u[j] = v
    return ClockField(region, u, seed=clock.seed, check=False)


@dataclass(frozen=True)
class SwitchingPath:
    """Vertices ``x_1 .. x_m`` with the perturbed edge at ``(x_i, x_{i+1})``.

    ``pivot`` is the 0-based position ``i``.  When ``cycle`` is true the
    endpoints coincide.
    """

    vertices: tuple
    pivot: int
    cycle: bool

    def edges(self):
        vs = self.vertices
        return [(vs[k], vs[k + 1]) for k in range(len(vs) - 1)]


def _diff_edges(clock, p, kappa, j):
    plus = open_ids(perturb_clock(clock, j, 0.0), p, kappa)
    minus = open_ids(perturb_clock(clock, j, 1.0), p, kappa)
    diff = [f for f in range(clock.region.num_edges) if plus[f] != minus[f]]
    return plus, minus, diff


def _assemble(region, u, j, diff):
    """Order the differing edges into a path through edge ``j``."""
    at = {}
    for f in diff:
        for x in (region.ea[f], region.eb[f]):
            at.setdefault(x, []).append(f)
    if any(len(fs) > 2 for fs in at.values()):
        raise SwitchingPathError("differing edges branch at a vertex")

    def walk(start):
        verts = [start]
        edges = []
        used = {j}
        v = start
        while True:
            nxt = [f for f in at[v] if f not in used]
            if not nxt:
                return verts, edges
            f = nxt[0]
            used.add(f)
            edges.append(f)
            v = region.other_end(f, v)
            if v in verts:
                raise SwitchingPathError("differing edges self-intersect")
            verts.append(v)

    a, b = region.ea[j], region.eb[j]
    side_a, edges_a = walk(a)
    if side_a[-1] == b:
        # even cycle: values rise away from j in both directions and meet
        # at the peak edge; cut the cycle at the far end of that edge
        if set(edges_a) | {j} != set(diff):
            raise SwitchingPathError("differing edges are not connected")
        vals = [u[f] for f in edges_a]
        meet = max(range(len(vals)), key=vals.__getitem__) + 1
        first = side_a[meet::-1]  # meeting vertex .. a
        second = side_a[meet:]  # meeting vertex .. b
        verts = first + second[::-1]
        return SwitchingPath(tuple(region.vertices[x] for x in verts), len(first) - 1, True)
    side_b, edges_b = walk(b)
    if set(side_a) & set(side_b):
        raise SwitchingPathError("differing edges self-intersect")
    if set(edges_a) | set(edges_b) | {j} != set(diff):
        raise SwitchingPathError("differing edges are not connected")
    verts = side_a[::-1] + side_b
    return SwitchingPath(tuple(region.vertices[x] for x in verts), len(side_a) - 1, False)


def verify_switching_path(clock, p, kappa, e, path, plus=None, minus=None, base=None):
    """Raise :class:`SwitchingPathError` if any structural property fails."""
    region = clock.region
    j = region.eid(e)
    u = clock.u
    if plus is None:
        plus, minus, _ = _diff_edges(clock, p, kappa, j)
    if base is None:
        base = open_ids(clock, p, kappa)
    ids = [region.eid(f) for f in path.edges()]
    diff = {f for f in range(region.num_edges) if plus[f] != minus[f]}
    if len(set(ids)) != len(ids) or set(ids) != diff:
        raise SwitchingPathError("path edges differ from the switched set")
    if ids[path.pivot] != j:
        raise SwitchingPathError("pivot is not the perturbed edge")
    vs = path.vertices
    inner = vs[:-1] if path.cycle else vs
    if len(set(inner)) != len(inner):
        raise SwitchingPathError("path self-intersects")
    if path.cycle and vs[0] != vs[-1]:
        raise SwitchingPathError("cycle does not close")
    for conf in (plus, minus):
        states = [conf[f] for f in ids]
        pairs = list(zip(states, states[1:]))
        if path.cycle and len(states) > 1:
            pairs.append((states[-1], states[0]))
        if any(s == t for s, t in pairs):
            raise SwitchingPathError("states do not alternate along the path")
    left = [u[f] for f in ids[: path.pivot]]
    right = [u[f] for f in reversed(ids[path.pivot + 1:])]
    for half in (left, right):
        if half and (half[0] > p or any(x <= y for x, y in zip(half, half[1:]))):
            raise SwitchingPathError("half of the path is not decreasing")
    if bytes(base) != bytes(plus) and bytes(base) != bytes(minus):
        raise SwitchingPathError("unperturbed configuration matches neither perturbation")


def switching_path(clock, p, kappa, e, check=None):
    """The switching path of edge ``e`` at time ``p``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    region = clock.region
    j = region.eid(e)
    plus, minus, diff = _diff_edges(clock, p, kappa, j)
    if j not in diff:
        raise SwitchingPathError("perturbed edge is not switched")
    path = _assemble(region, clock.ulist, j, diff)
    if check is None:
        check = not _RELEASE or rng.mix(clock.seed or 0, j) % 1000 == 0
    if check:
        verify_switching_path(clock, p, kappa, j, path, plus, minus)
    return path


def is_p_pivotal(clock, p, kappa, n, e):
    """Edge above p whose value, lowered to exactly p, flips the event."""
    j = clock.region.eid(e)
    if clock.u[j] <= p:
        return False
    return tau_indicator(clock, p, kappa, n) != tau_indicator(perturb_clock(clock, j, p), p, kappa, n)


def _gap_values(u, j, p, neighbours=None):
    """One value per equivalence class of placements of edge ``j``'s clock.

    Only comparisons between adjacent edges enter the dynamics and the
    decreasing-path condition, so with ``neighbours`` given the cuts are
    taken from the adjacent edges alone.
    """
    pool = range(len(u)) if neighbours is None else neighbours
    below = sorted(u[k] for k in pool if k != j and u[k] <= p)
    cuts = [0.0] + below + [p]
    vals = [(lo + hi) / 2 for lo, hi in zip(cuts, cuts[1:]) if hi > lo]
    vals.append((p + 1.0) / 2 if p < 1.0 else None)
    return [v for v in vals if v is not None]


def _flips(clock, p, kappa, n, j, base):
    u = clock.ulist
    for v in _gap_values(u, j, p, clock.region.adjacent_edges[j]):
        if tau_indicator(perturb_clock(clock, j, v), p, kappa, n) != base:
            return True
    return False


def is_u_pivotal(clock, p, kappa, n, e):
    """Some replacement of edge ``e``'s clock value flips the event.

    The event only sees which values are below p and their relative order,
    and only relative to adjacent edges, so it suffices to try one value in
    every gap between the adjacent below-p values, plus one value above p.
    """
    j = clock.region.eid(e)
    return _flips(clock, p, kappa, n, j, tau_indicator(clock, p, kappa, n))


def pivotal_counts(clock, p, kappa, n):
    """Numbers of U-pivotal and p-pivotal edges of one clock."""
    base = tau_indicator(clock, p, kappa, n)
    u = clock.ulist
    nu = npiv = 0
    for j in range(clock.region.num_edges):
        if u[j] > p and not base and tau_indicator(perturb_clock(clock, j, p), p, kappa, n):
            npiv += 1
            nu += 1
        elif _flips(clock, p, kappa, n, j, base):
            nu += 1
    return nu, npiv


def transfer_ratio(region, p, kappa, n, samples, seed):
    """Monte Carlo estimates of both pivotal sums and their ratio.

    Returns a dict with ``sum_u`` and ``sum_p`` as ``(mean, stderr)`` and
    ``ratio`` (``None`` when no p-pivotal edge was ever seen).
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    us = np.empty(samples)
    ps = np.empty(samples)
    for i in range(samples):
        c = sample_clock(region, rng.sample_seed(seed, i))
        us[i], ps[i] = pivotal_counts(c, p, kappa, n)

    def summary(x):
        se = x.std(ddof=1) / math.sqrt(len(x)) if len(x) > 1 else float("nan")
        return float(x.mean()), float(se)

    su, sp = summary(us), summary(ps)
    return {
        "sum_u": su,
        "sum_p": sp,
        "ratio": su[0] / sp[0] if sp[0] > 0 else None,
        "samples": samples,
    }
