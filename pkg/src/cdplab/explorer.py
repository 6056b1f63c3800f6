"""The randomized exploration algorithm deciding the modified one-arm event.

``A_r`` starts from the sphere of radius r and alternates four rules, always
applying the first one that is applicable:

1. grow the explored vertex set ``R`` along an established-open edge;
2. mark an edge of ``S`` as established open once the revealed clock values
   decide its state (``S`` is the set of revealed edges, ``T`` the
   established-open ones);
3. reveal an edge at the end of a decreasing path of revealed edges
   starting in ``R``;
4. if the revealed edges contain a decreasing path from the sphere of radius
   r to the origin, adopt the sphere of radius n into ``R``.

Ties are broken by the lowest canonical edge id so runs replay exactly.
The mixture ``A`` picks r uniformly from ``1..n``.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .dynamics import closure_ids, open_ids, sample_clock, states_on
from .events import find_witness
from .lattice import DomainError


class ExplorationError(AssertionError):
    """An internal invariant of the exploration failed."""


@dataclass
class ExplorationState:
    """Final sets of one exploration, as vertex tuples and canonical edges."""

    R: frozenset
    S: frozenset
    T: frozenset
    step_log: list = field(default_factory=list)
    adopted: bool = False


def determined_state(clock, revealed, p, kappa, e):
    """``"open"``/``"closed"`` if the revealed values decide edge ``e``, else ``"unknown"``."""
    region = clock.region
    j = region.eid(e)
    ids = {region.eid(f) for f in revealed}
    closure = closure_ids(clock, [j])
    if not closure <= ids:
        return "unknown"
    return "open" if states_on(clock, closure, p, kappa)[j] else "closed"


class _Run:
    """Mutable state of a single ``A_r`` run, with incremental rule candidates."""

    def __init__(self, clock, p, kappa, n, r, log):
        region = clock.region
        self.region = region
        self.u = clock.ulist
        self.p = p
        self.kappa = kappa
        self.n = n
        self.r = r
        self.log = [] if log else None
        nv, ne = region.num_vertices, region.num_edges
        self.inR = bytearray(nv)
        self.inS = bytearray(ne)
        self.inT = bytearray(ne)
        # determined[j]: j and its whole dependence closure are revealed
        self.det = bytearray(ne)
        self.state = bytearray(ne)
        # largest last-value of a decreasing S-path from R to each vertex
        self.bound = [-1.0] * nv
        self.start_bound = float(np.nextafter(p, 2.0))
        self.h1, self.h2, self.h3 = [], [], []
        self.adopted = False
        self.head_ok = [min(region.norm[a], region.norm[b]) < n
                        for a, b in zip(region.ea, region.eb)]
        self.steps = 0

    # -- bookkeeping ----------------------------------------------------

    def add_R(self, v):
        if self.inR[v]:
            return
        self.inR[v] = 1
        for j in self.region.incident[v]:
            if self.inT[j]:
                heapq.heappush(self.h1, j)
        self.raise_bound(v, self.start_bound)

    def raise_bound(self, v, b):
        region = self.region
        u = self.u
        stack = [(v, b)]
        while stack:
            x, bx = stack.pop()
            if bx <= self.bound[x]:
                continue
            fresh = self.bound[x] < 0
            self.bound[x] = bx
            for j in region.incident[x]:
                if fresh and not self.inS[j]:
                    heapq.heappush(self.h3, j)
                if self.inS[j] and u[j] < bx:
                    stack.append((region.other_end(j, x), u[j]))

    def add_S(self, j):
        region = self.region
        self.inS[j] = 1
        a, b = region.ea[j], region.eb[j]
        uj = self.u[j]
        if self.bound[a] > uj:
            self.raise_bound(b, uj)
        if self.bound[b] > uj:
            self.raise_bound(a, uj)
        self.propagate_determined(j)

    def propagate_determined(self, j0):
        region = self.region
        u = self.u
        adj = region.adjacent_edges
        stack = [j0]
        while stack:
            j = stack.pop()
            if self.det[j] or not self.inS[j]:
                continue
            uj = u[j]
            if any(u[g] < uj and not self.det[g] for g in adj[j]):
                continue
            self.det[j] = 1
            self.state[j] = self._decide(j)
            if self.state[j] and self.head_ok[j] and not self.inT[j]:
                heapq.heappush(self.h2, j)
            for g in adj[j]:
                if u[g] > uj and self.inS[g] and not self.det[g]:
                    stack.append(g)

    def _decide(self, j):
        uj = self.u[j]
        if uj > self.p:
            return 0
        region = self.region
        for x in (region.ea[j], region.eb[j]):
            deg = sum(1 for g in region.incident[x]
                      if g != j and self.u[g] < uj and self.state[g])
            if deg >= self.kappa:
                return 0
        return 1

    def add_T(self, j):
        self.inT[j] = 1
        heapq.heappush(self.h1, j)

    # -- rules ------------------------------------------------------------

    def rule1(self):
        region = self.region
        while self.h1:
            j = self.h1[0]
            a, b = region.ea[j], region.eb[j]
            if self.inR[a] != self.inR[b]:
                heapq.heappop(self.h1)
                self.add_R(b if self.inR[a] else a)
                return j
            heapq.heappop(self.h1)
        return None

    def rule2(self):
        while self.h2:
            j = heapq.heappop(self.h2)
            if not self.inT[j]:
                self.add_T(j)
                return j
        return None

    def rule3(self):
        while self.h3:
            j = heapq.heappop(self.h3)
            if not self.inS[j]:
                self.add_S(j)
                return j
        return None

    def rule4(self):
        region = self.region
        outer = region.sphere_ids(self.n)
        if self.adopted or all(self.inR[v] for v in outer):
            return False
        if not self.decreasing_from_sphere():
            return False
        self.adopted = True
        for v in outer:
            self.add_R(v)
        return True

    def decreasing_from_sphere(self):
        """Is there a decreasing path of revealed edges from the r-sphere to 0?"""
        region = self.region
        u = self.u
        arrive = {region.origin: -1.0}
        heap = [(-1.0, region.origin)]
        norm = region.norm
        while heap:
            t, v = heapq.heappop(heap)
            if t > arrive[v]:
                continue
            if norm[v] == self.r:
                return True
            for j in region.incident[v]:
                x = u[j]
                if self.inS[j] and t < x <= self.p:
                    w = region.other_end(j, v)
                    if x < arrive.get(w, 2.0):
                        arrive[w] = x
                        heapq.heappush(heap, (x, w))
        return False

    def run(self):
        region = self.region
        for v in region.sphere_ids(self.r):
            self.add_R(v)
        limit = region.num_vertices + 2 * region.num_edges + 1
        while True:
            for rule, fn in ((1, self.rule1), (2, self.rule2), (3, self.rule3)):
                j = fn()
                if j is not None:
                    break
            else:
                rule = 4 if self.rule4() else None
                j = None
            if rule is None:
                break
            self.steps += 1
            if self.log is not None:
                self.log.append((rule, region.edges[j] if j is not None else None))
            if self.steps > limit:
                raise ExplorationError(f"exploration exceeded {limit} steps")

    def decide(self):
        region = self.region
        order = sorted((j for j in range(region.num_edges) if self.inS[j]), key=self.u.__getitem__)
        return find_witness(region, self.n, self.inT, self.u, order, self.p, self.inS) is not None


def _check_args(region, p, kappa, n, r):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if int(n) != n or not 1 <= n <= region.R:
        raise DomainError(f"n must be an integer in [1, {region.R}], got {n}")
    if int(r) != r or not 1 <= r <= n:
        raise DomainError(f"r must be an integer in [1, {n}], got {r}")
    if int(kappa) != kappa or not 2 <= kappa <= 2 * region.d:
        raise DomainError(f"kappa must be an integer in [2, {2 * region.d}], got {kappa}")


def run_Ar(clock, p, kappa, n, r, log=True, check=False):
    """Run ``A_r``; returns ``(decision, revealed edge set, ExplorationState)``.

    With ``check=True`` the internal invariants (soundness of rule 2, the
    reach property of ``R`` and the witness property of revealed edges)
    are asserted against the full clock.
    """
    region = clock.region
    _check_args(region, p, kappa, n, r)
    run = _Run(clock, p, kappa, n, r, log)
    run.run()
    decision = run.decide()
    if check:
        check_run(clock, run)
    edges = region.edges
    S = frozenset(edges[j] for j in range(region.num_edges) if run.inS[j])
    T = frozenset(edges[j] for j in range(region.num_edges) if run.inT[j])
    R = frozenset(region.vertices[v] for v in range(region.num_vertices) if run.inR[v])
    return decision, S, ExplorationState(R, S, T, run.log or [], run.adopted)


def revealed_ids(clock, p, kappa, n, r):
    """Fast path: ``(decision, revealed flags)`` without building the state."""
    region = clock.region
    _check_args(region, p, kappa, n, r)
    run = _Run(clock, p, kappa, n, r, log=False)
    run.run()
    return run.decide(), run.inS


def check_run(clock, run):
    region = run.region
    full = open_ids(clock, run.p, run.kappa)
    for j in range(region.num_edges):
        if run.inT[j] and not full[j]:
            raise ExplorationError(f"edge {region.edges[j]} established open but closed")
        if run.inT[j] and not run.inS[j]:
            raise ExplorationError("established edge was never revealed")
    seeds = set(region.sphere_ids(run.r))
    if run.adopted:
        seeds |= set(region.sphere_ids(run.n))
    reach = set(seeds)
    stack = list(seeds)
    while stack:
        v = stack.pop()
        for j in region.incident[v]:
            if run.inT[j]:
                w = region.other_end(j, v)
                if w not in reach:
                    reach.add(w)
                    stack.append(w)
    R = {v for v in range(region.num_vertices) if run.inR[v]}
    if R != reach:
        raise ExplorationError("R differs from the T-reach of the seed set")
    # every revealed edge hangs off a nice path: an endpoint is decreasing-reachable from R
    for j in range(region.num_edges):
        if run.inS[j] and run.bound[region.ea[j]] < 0 and run.bound[region.eb[j]] < 0:
            raise ExplorationError(f"revealed edge {region.edges[j]} has no nice path to it")


def closed_form_revealed(clock, p, kappa, n, r):
    """The final revealed set of ``A_r`` computed without running the rules.

    ``R`` is the cluster of the r-sphere (plus the n-sphere when the origin
    is decreasing-reachable from the r-sphere) through open edges with an
    endpoint of norm < n; the revealed edges are those incident to a vertex
    decreasing-reachable from ``R``.
    """
    region = clock.region
    u = clock.ulist
    full = open_ids(clock, p, kappa)

    def reach_from(seeds):
        bound = {v: float(np.nextafter(p, 2.0)) for v in seeds}
        stack = list(seeds)
        while stack:
            v = stack.pop()
            for j in region.incident[v]:
                if u[j] < bound[v]:
                    w = region.other_end(j, v)
                    if u[j] > bound.get(w, -1.0):
                        bound[w] = u[j]
                        stack.append(w)
        return bound

    sphere_r = region.sphere_ids(r)
    seeds = set(sphere_r)
    if region.origin in reach_from(sphere_r):
        seeds |= set(region.sphere_ids(n))
    norm = region.norm
    R = set(seeds)
    stack = list(seeds)
    while stack:
        v = stack.pop()
        for j in region.incident[v]:
            w = region.other_end(j, v)
            if full[j] and min(norm[v], norm[w]) < n and w not in R:
                R.add(w)
                stack.append(w)
    D = reach_from(R)
    return {region.edges[j] for j in range(region.num_edges)
            if region.ea[j] in D or region.eb[j] in D}


def choose_r(n, algorithm_seed):
    return 1 + rng.mix(algorithm_seed) % n


def run_A(clock, p, kappa, n, algorithm_seed):
    """The mixture algorithm: ``r`` uniform on ``1..n`` from ``algorithm_seed``."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    r = choose_r(n, algorithm_seed)
    decision, revealed, _ = run_Ar(clock, p, kappa, n, r, log=False)
    return decision, revealed


@dataclass
class RevealmentReport:
    delta: np.ndarray
    delta_stderr: np.ndarray
    delta_max: float
    delta_max_edge: tuple
    delta_max_upper: float
    sigma: float
    sigma_lower: float
    bound: float
    bound_lower: float
    holds: bool
    samples: int
    tau: list

    def to_dict(self):
        return {
            "delta_max": self.delta_max,
            "delta_max_edge": list(map(list, self.delta_max_edge)),
            "delta_max_upper95": self.delta_max_upper,
            "sigma": self.sigma,
            "sigma_lower95": self.sigma_lower,
            "bound": self.bound,
            "bound_lower95": self.bound_lower,
            "holds": self.holds,
            "samples": self.samples,
            "tau": self.tau,
        }


def measure_revealment(region, p, kappa, n, samples, seed, exact_r=True):
    """Monte Carlo revealment of the mixture ``A`` and the bound ``10 Sigma_n / n``.

    With ``exact_r`` every clock is explored once for each r and the
    per-edge indicator is averaged over r, which is the mixture's revealment
    conditioned on the clock (lower variance than drawing r).  ``tau_k`` for
    ``k < n`` is estimated on the same clocks.  The bound is declared to
    hold when the 95% upper limit of ``delta_max`` is below the 95% lower
    limit of ``10 Sigma_n / n``.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    _check_args(region, p, kappa, n, 1)
    from .events import tau_indicator

    m = region.num_edges
    acc = np.zeros(m)
    acc2 = np.zeros(m)
    tau_hits = np.zeros(n)
    tau_hits[0] = samples
    for i in range(samples):
        clock = sample_clock(region, rng.sample_seed(seed, i))
        if exact_r:
            rs = range(1, n + 1)
        else:
            rs = [choose_r(n, rng.algorithm_seed(seed, i))]
        x = np.zeros(m)
        for r in rs:
            _, flags = revealed_ids(clock, p, kappa, n, r)
            x += np.frombuffer(bytes(flags), dtype=np.uint8)
        x /= len(rs)
        acc += x
        acc2 += x * x
        for k in range(1, n):
            tau_hits[k] += tau_indicator(clock, p, kappa, k)
    delta = acc / samples
    var = np.maximum(acc2 / samples - delta**2, 0.0)
    se = np.sqrt(var / max(samples - 1, 1))
    jmax = int(np.argmax(delta))
    taus = tau_hits / samples
    sigma = float(taus.sum())
    se_sigma = math.sqrt(sum(t * (1 - t) for t in taus[1:]) / samples) if n > 1 else 0.0
    z = 1.959963984540054
    # union over edges: Bonferroni on the max
    zmax = _normal_quantile(1 - 0.05 / (2 * m))
    upper = float(delta[jmax] + zmax * se[jmax])
    upper = max(upper, float(np.max(delta + zmax * se)))
    sigma_lo = sigma - z * se_sigma
    bound = 10 * sigma / n
    bound_lo = 10 * sigma_lo / n
    return RevealmentReport(
        delta=delta,
        delta_stderr=se,
        delta_max=float(delta[jmax]),
        delta_max_edge=region.edges[jmax],
        delta_max_upper=upper,
        sigma=sigma,
        sigma_lower=sigma_lo,
        bound=bound,
        bound_lower=bound_lo,
        holds=upper <= bound_lo,
        samples=samples,
        tau=[float(t) for t in taus],
    )


def _normal_quantile(q):
    from statistics import NormalDist

    return NormalDist().inv_cdf(q)
