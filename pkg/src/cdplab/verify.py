"""Randomised property suites shared by the test-suite and ``cdp-lab verify``.

Each suite draws its trials from a seeded numpy Generator and returns a
:class:`SuiteResult`; a suite fails if any trial violates its property.
"""

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .dynamics import evolve, replay, sample_clock, trajectory
from .events import decreasing_reach, modified_one_arm, standard_one_arm, tau_indicator, theta_indicator
from .explorer import closed_form_revealed, run_Ar
from .lattice import box, norm1
from .local import evaluate_pair
from .pivotality import SwitchingPathError, is_u_pivotal, perturb_clock, switching_path


@dataclass
class SuiteResult:
    name: str
    trials: int
    failures: int
    seconds: float
    examples: list = field(default_factory=list)

    @property
    def ok(self):
        return self.failures == 0

    def line(self):
        tag = "PASS" if self.ok else "FAIL"
        return f"{tag} {self.name}: {self.trials} trials, {self.failures} failures ({self.seconds:.1f}s)"

    def to_dict(self):
        return {"name": self.name, "trials": self.trials, "failures": self.failures,
                "ok": self.ok, "examples": self.examples[:5]}


class _Suite:
    def __init__(self, name):
        self.name = name
        self.trials = 0
        self.failures = 0
        self.examples = []
        self.t0 = time.perf_counter()

    def record(self, ok, detail=None):
        self.trials += 1
        if not ok:
            self.failures += 1
            if len(self.examples) < 5:
                self.examples.append(detail)

    def result(self):
        return SuiteResult(self.name, self.trials, self.failures,
                           time.perf_counter() - self.t0, self.examples)


def _seed(g):
    return int(g.integers(0, 2**63))


def lattice_suite(trials=None, seed=0):
    """Edge counts of every ball against exhaustive pair enumeration."""
    s = _Suite("lattice")
    for d in (2, 3):
        for R in range(0, 7):
            reg = box(d, R)
            verts = [v for v in itertools.product(range(-R, R + 1), repeat=d) if norm1(v) <= R]
            pairs = sum(1 for a, b in itertools.combinations(verts, 2)
                        if norm1(tuple(x - y for x, y in zip(a, b))) == 1)
            s.record(pairs == reg.num_edges, (d, R, pairs, reg.num_edges))
    return s.result()


def dynamics_suite(trials=200, seed=0):
    """Configuration invariants, trajectory replay and the Bernoulli reduction."""
    g = np.random.default_rng(seed)
    s = _Suite("dynamics")
    for _ in range(trials):
        d = int(g.integers(2, 4))
        R = int(g.integers(1, 6 if d == 2 else 4))
        reg = box(d, R)
        clock = sample_clock(reg, _seed(g))
        p = float(g.uniform())
        kappa = int(g.integers(2, 2 * d + 1))
        conf = evolve(clock, p, kappa)
        try:
            conf.check_invariants()
            ok = True
        except AssertionError as exc:
            ok = False
            s.record(False, str(exc))
            continue
        ok &= replay(trajectory(clock, kappa), reg, p, kappa) == conf
        bern = evolve(clock, p, 2 * d)
        ok &= bool(np.array_equal(bern.open, (clock.u <= p).astype(np.uint8)))
        s.record(ok, (d, R, clock.seed, p, kappa))
    return s.result()


def _dfs_reach(clock, p, n):
    """Vertices with a decreasing path to the origin, by enumerating self-avoiding paths."""
    region = clock.region
    u = clock.ulist
    norm = region.norm
    found = {region.origin}

    # walk outward from the origin with increasing values
    def go(v, last, seen):
        if norm[v] >= n:
            return
        for j in region.incident[v]:
            x = u[j]
            if last < x <= p:
                w = region.other_end(j, v)
                if w not in seen:
                    found.add(w)
                    seen.add(w)
                    go(w, x, seen)
                    seen.discard(w)

    go(region.origin, -1.0, {region.origin})
    return found


def events_suite(trials=200, seed=0):
    """Witness validity, domination, monotonicity and the reach DP against DFS."""
    g = np.random.default_rng(seed)
    s = _Suite("events")
    for _ in range(trials):
        d = int(g.integers(2, 4))
        R = int(g.integers(1, 5 if d == 2 else 3))
        reg = box(d, R)
        clock = sample_clock(reg, _seed(g))
        p = float(g.uniform())
        kappa = int(g.integers(2, 2 * d + 1))
        n = int(g.integers(1, R + 1))
        conf = evolve(clock, p, kappa)
        occurs, wit = modified_one_arm(clock, p, kappa, n)
        ok = True
        if occurs:
            try:
                wit.check(clock, p, kappa, n, conf)
            except AssertionError:
                ok = False
        th = standard_one_arm(conf, n)
        ok &= (not th) or occurs
        p2 = min(1.0, p + float(g.uniform(0, 0.3)))
        ok &= (not occurs) or tau_indicator(clock, p2, kappa, n)
        if n > 1:
            ok &= (not occurs) or tau_indicator(clock, p, kappa, n - 1)
        if reg.num_edges <= 40:
            dp = decreasing_reach(clock, p, n=n)
            brute = _dfs_reach(clock, p, n)
            ok &= {v for v, r in dp.items() if r and norm1(v) <= n} == \
                {reg.vertices[i] for i in brute if reg.norm[i] <= n}
        s.record(ok, (d, R, clock.seed, p, kappa, n))
    return s.result()


def lazy_suite(trials=200, seed=0):
    """Lazy local evaluation equals the full-region sweep."""
    g = np.random.default_rng(seed)
    s = _Suite("lazy-vs-eager")
    for _ in range(trials):
        d = int(g.integers(2, 4))
        R = int(g.integers(2, 7 if d == 2 else 4))
        reg = box(d, R)
        sd = _seed(g)
        clock = sample_clock(reg, sd)
        p = float(g.choice([0.2, 0.4, 0.6, 0.9, 1.0]))
        kappa = int(g.integers(2, 2 * d + 1))
        n = int(g.integers(1, R + 1))
        th, ta, _ = evaluate_pair(d, R, sd, p, kappa, n)
        ok = th == theta_indicator(clock, p, kappa, n)
        ok &= ta == tau_indicator(clock, p, kappa, n)
        s.record(ok, (d, R, sd, p, kappa, n))
    return s.result()


def switching_suite(trials=1000, seed=0, max_R=5):
    """Switching paths: simple path or cycle through e, alternating, decreasing halves."""
    g = np.random.default_rng(seed)
    s = _Suite("switching-path")
    for _ in range(trials):
        d = int(g.integers(2, 4))
        R = int(g.integers(1, max_R + 1))
        reg = box(d, R)
        clock = sample_clock(reg, _seed(g))
        e = int(g.integers(reg.num_edges))
        p = float(g.uniform(0.01, 0.99))
        kappa = int(g.integers(2, 2 * d + 1))
        try:
            switching_path(clock, p, kappa, e, check=True)
            s.record(True)
        except SwitchingPathError as exc:
            s.record(False, (d, R, clock.seed, e, p, kappa, str(exc)))
    return s.result()


def gap_scan_suite(trials=40, seed=0, grid=1000):
    """U-pivotality by gap scan agrees with a fine grid of replacement values."""
    g = np.random.default_rng(seed)
    s = _Suite("gap-scan")
    reg = box(2, 1)
    values = (np.arange(grid) + 0.5) / grid
    for _ in range(trials):
        clock = sample_clock(reg, _seed(g))
        p = float(g.uniform(0.05, 0.95))
        kappa = int(g.integers(2, 5))
        e = int(g.integers(reg.num_edges))
        base = tau_indicator(clock, p, kappa, 1)
        brute = any(tau_indicator(perturb_clock(clock, e, float(v)), p, kappa, 1) != base
                    for v in values)
        s.record(brute == is_u_pivotal(clock, p, kappa, 1, e), (clock.seed, p, kappa, e))
    return s.result()


def explorer_suite(trials=200, seed=0, d=2, R=6, ns=(2, 4), kappas=(3, 4), closed_form=True):
    """A_r decisions against ground truth for every r, plus internal invariants."""
    g = np.random.default_rng(seed)
    s = _Suite("explorer")
    for _ in range(trials):
        reg = box(d, R)
        clock = sample_clock(reg, _seed(g))
        p = float(g.uniform(0.1, 0.9))
        kappa = int(g.choice(kappas))
        n = int(g.choice(ns))
        truth = modified_one_arm(clock, p, kappa, n)[0]
        for r in range(1, n + 1):
            try:
                dec, S, _ = run_Ar(clock, p, kappa, n, r, log=False, check=True)
            except AssertionError as exc:
                s.record(False, (clock.seed, p, kappa, n, r, str(exc)))
                continue
            ok = dec == truth
            if closed_form:
                ok &= closed_form_revealed(clock, p, kappa, n, r) == set(S)
            s.record(ok, (clock.seed, p, kappa, n, r))
    return s.result()


def oracle_suite(trials=None, seed=0):
    """Exact identities on the star and the radius-2 ball."""
    from fractions import Fraction

    from .oracle import osss_check, russo_check

    s = _Suite("oracle")
    for R, n, kappas in ((1, 1, (2, 3, 4)), (2, 2, (3, 4))):
        reg = box(2, R)
        for kappa in kappas:
            for p in (0.2, 0.5, 0.8):
                rr = russo_check(reg, kappa, n, p)
                s.record(rr.exact_zero, ("russo", R, kappa, p, rr.residual))
                oo = osss_check(reg, kappa, n, p)
                s.record(oo.holds, ("osss", R, kappa, p))
                if R == 1:
                    s.record(rr.derivative == 4 * (1 - Fraction(p)) ** 3, ("closed form", p))
    return s.result()


def coupling_suite(trials=500, seed=0):
    """theta <= tau per clock; tau non-decreasing in p on shared clocks (lazy engine)."""
    g = np.random.default_rng(seed)
    s = _Suite("coupling")
    from .local import LocalClock, tau_local, theta_local

    for i in range(trials):
        sd = rng.sample_seed(seed, i)
        d = 2
        kappa = int(g.integers(2, 5))
        n = int(g.integers(1, 9))
        ps = np.sort(g.uniform(size=3))
        prev = False
        ok = True
        for p in ps:
            lc = LocalClock(d, n + 4, sd, float(p), kappa)
            th, ta = theta_local(lc, n), tau_local(lc, n)
            ok &= (not th) or ta
            ok &= (not prev) or ta
            prev = ta
        s.record(ok, (sd, kappa, n))
    return s.result()


SUITES = {
    "lattice": lattice_suite,
    "dynamics": dynamics_suite,
    "events": events_suite,
    "lazy": lazy_suite,
    "switching": switching_suite,
    "gap-scan": gap_scan_suite,
    "explorer": explorer_suite,
    "coupling": coupling_suite,
    "oracle": oracle_suite,
}

QUICK = {"dynamics": 50, "events": 50, "lazy": 50, "switching": 300, "gap-scan": 10,
         "explorer": 30, "coupling": 100}


def run_all(quick=False, trials=None, seed=0, only=None):
    out = []
    for name, fn in SUITES.items():
        if only and name not in only:
            continue
        if trials is not None and name not in ("lattice", "oracle"):
            out.append(fn(trials=trials, seed=seed))
        elif quick and name in QUICK:
            out.append(fn(trials=QUICK[name], seed=seed))
        else:
            out.append(fn(seed=seed))
    return out
