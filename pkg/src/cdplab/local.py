"""Lazy evaluation of one-arm indicators on large balls.

Clock values are hashed on demand and an edge's state at time p is obtained
by recursing into its earlier neighbours only.  Below criticality a sample
touches a few hundred edges instead of the whole ball, and the result is
identical to running :func:`cdplab.dynamics.evolve` on the full region with
the same seed.

Every edge whose state had to be computed is checked against the outer
sphere; ``certified`` is False when one of them touches it (the value might
then differ from its infinite-volume counterpart).
"""

import heapq

from .rng import MASK64, _INIT, splitmix64

_G = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


class LocalClock:
    def __init__(self, d, R, seed, p, kappa):
        self.d = d
        self.R = R
        self.seed = seed
        self.p = p
        self.kappa = kappa
        self._u = {}
        self._state = {}
        self._inc = {}
        self.certified = True
        # hash state after absorbing the seed; matches rng.edge_uniform
        self._h0 = splitmix64(_INIT ^ (seed & MASK64))

    def u(self, key):
        x = self._u.get(key)
        if x is None:
            h = self._h0
            for w in (*key[0], key[1]):
                h = ((h ^ (w & MASK64)) + _G) & MASK64
                h = ((h ^ (h >> 30)) * _M1) & MASK64
                h = ((h ^ (h >> 27)) * _M2) & MASK64
                h ^= h >> 31
            x = ((h >> 11) + 0.5) * 2.0**-53
            self._u[key] = x
        return x

    def incident(self, v):
        """Edge keys ``(low, axis)`` and far endpoints around ``v`` inside the ball."""
        out = self._inc.get(v)
        if out is not None:
            return out
        R = self.R
        nv = sum(map(abs, v))
        out = []
        for axis in range(self.d):
            c = v[axis]
            if nv + (1 if c >= 0 else -1) <= R:
                up = v[:axis] + (c + 1,) + v[axis + 1:]
                out.append(((v, axis), up))
            if nv + (1 if c <= 0 else -1) <= R:
                dn = v[:axis] + (c - 1,) + v[axis + 1:]
                out.append(((dn, axis), dn))
        self._inc[v] = out
        return out

    def is_open(self, key):
        s = self._state.get(key)
        if s is not None:
            return s
        t = self.u(key)
        if t > self.p:
            self._state[key] = False
            return False
        low, axis = key
        high = low[:axis] + (low[axis] + 1,) + low[axis + 1:]
        kappa = self.kappa
        s = True
        for x in (low, high):
            if sum(map(abs, x)) == self.R:
                self.certified = False
            earlier = [g for g, _ in self.incident(x) if g != key and self.u(g) < t]
            # fewer than kappa earlier edges can never saturate x
            if len(earlier) < kappa:
                continue
            deg = 0
            for g in earlier:
                if self.is_open(g):
                    deg += 1
            if deg >= kappa:
                s = False
                break
        self._state[key] = s
        return s


def _norm(v):
    return sum(map(abs, v))


def theta_local(lc, n):
    """Standard one-arm indicator, exploring the origin's open cluster."""
    if n == 0:
        return True
    origin = (0,) * lc.d
    seen = {origin}
    stack = [origin]
    while stack:
        v = stack.pop()
        for key, w in lc.incident(v):
            if w in seen:
                continue
            nw = _norm(w)
            if nw > n:
                continue
            if lc.is_open(key):
                if nw == n:
                    return True
                seen.add(w)
                stack.append(w)
    return False


def tail_local(lc, n):
    """Vertices with a decreasing path to the origin (interior constraint applied).

    Earliest-arrival search outward from the origin: values must increase
    going away from the origin and stay <= p.
    """
    origin = (0,) * lc.d
    p = lc.p
    arrive = {origin: 0.0}
    heap = [(0.0, origin)]
    while heap:
        t, v = heapq.heappop(heap)
        if t > arrive[v] or _norm(v) >= n:
            continue
        for key, w in lc.incident(v):
            x = lc.u(key)
            if t < x <= p and x < arrive.get(w, 2.0):
                arrive[w] = x
                heapq.heappush(heap, (x, w))
    return arrive


def tau_local(lc, n):
    """Modified one-arm indicator: decreasing tail first, then an open head."""
    reach = tail_local(lc, n)
    if any(_norm(v) == n for v in reach):
        return True
    seen = set(reach)
    stack = list(reach)
    while stack:
        v = stack.pop()
        for key, w in lc.incident(v):
            if w in seen:
                continue
            nw = _norm(w)
            if nw > n:
                continue
            if lc.is_open(key):
                if nw == n:
                    return True
                seen.add(w)
                stack.append(w)
    return False


def evaluate(event, d, R, seed, p, kappa, n):
    """Return ``(indicator, certified)`` for one clock sample."""
    lc = LocalClock(d, R, seed, p, kappa)
    if p <= 0.0:
        return False if n > 0 else True, True
    val = theta_local(lc, n) if event == "theta" else tau_local(lc, n)
    return val, lc.certified


def evaluate_pair(d, R, seed, p, kappa, n):
    """Both indicators on one shared clock: ``(theta, tau, certified)``."""
    lc = LocalClock(d, R, seed, p, kappa)
    th = theta_local(lc, n)
    ta = tau_local(lc, n)
    return th, ta, lc.certified
