"""Seeded Monte Carlo estimation of the one-arm probabilities.

Sample ``i`` of a run with seed ``s`` uses the clock hashed from
``sample_seed(s, i)``; estimates at different ``p`` or ``n`` with the same
seed therefore share clocks (a monotone coupling).  Work is split into
fixed-size chunks whose integer tallies are summed, so the thread count
never changes a result.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import NormalDist

import numpy as np

from . import rng
from .lattice import DomainError, ball_size
from .local import LocalClock, tau_local, theta_local
from .oracle.arrangements import BudgetError

EVENTS = ("theta", "tau")
DEFAULT_MARGIN = 4
# samples x region edges
DEFAULT_BUDGET = 10**10
CHUNK = 1000
Z95 = NormalDist().inv_cdf(0.975)


def default_threads():
    try:
        return max(1, int(os.environ.get("CDP_LAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class Estimate:
    value: float
    stderr: float
    samples: int
    hits: int
    ci95: tuple
    certificate_failure_rate: float
    rejected: int = 0

    def to_dict(self):
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        return d


def wilson(hits, n, z=Z95):
    if n == 0:
        return (0.0, 1.0)
    ph = hits / n
    den = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return (max(0.0, centre - half), min(1.0, centre + half))


def make_estimate(hits, n, cert_fail, total, rejected=0):
    """Binomial estimate; Wilson interval when fewer than 30 hits or misses."""
    if n == 0:
        return Estimate(float("nan"), float("nan"), 0, 0, (0.0, 1.0),
                        cert_fail / total if total else 0.0, rejected)
    v = hits / n
    se = math.sqrt(v * (1 - v) / n)
    if min(hits, n - hits) < 30:
        ci = wilson(hits, n)
    else:
        ci = (max(0.0, v - Z95 * se), min(1.0, v + Z95 * se))
    return Estimate(v, se, n, hits, ci, cert_fail / total if total else 0.0, rejected)


@dataclass
class SweepResult:
    variable: str
    grid: list
    estimates: list
    metadata: dict = field(default_factory=dict)
    violations: int = 0

    def rows(self):
        for x, e in zip(self.grid, self.estimates):
            yield (x, e.value, e.stderr, e.ci95[0], e.ci95[1], e.certificate_failure_rate)

    def to_dict(self):
        return {
            "variable": self.variable,
            "grid": list(self.grid),
            "estimates": [e.to_dict() for e in self.estimates],
            "metadata": self.metadata,
            "monotonicity_violations": self.violations,
        }


def _check(event, d, kappa, n, p, samples, margin):
    if event not in EVENTS:
        raise DomainError(f"event must be one of {EVENTS}, got {event!r}")
    if int(d) != d or d < 2:
        raise DomainError(f"d must be an integer >= 2, got {d}")
    if int(kappa) != kappa or not 2 <= kappa <= 2 * d:
        raise DomainError(f"kappa must be an integer in [2, {2 * d}], got {kappa}")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if int(samples) != samples or samples < 1:
        raise DomainError(f"samples must be a positive integer, got {samples}")
    if int(margin) != margin or margin < 0:
        raise DomainError(f"margin must be a non-negative integer, got {margin}")


def _budget(d, R, samples, budget):
    size = d * ball_size(d, R)
    if samples * size > budget:
        raise BudgetError(
            f"{samples} samples on a ball of ~{size} edges exceed the budget of {budget:.3g} "
            "sample-edges; lower --samples or raise --budget"
        )


_EVAL = {"theta": theta_local, "tau": tau_local}


def _work(task):
    """Tally one chunk: hits and certificate failures per (event, p), plus coupling checks."""
    events, d, R, kappa, n, ps, seed, lo, hi, strict = task
    ne, npts = len(events), len(ps)
    hits = [[0] * npts for _ in events]
    valid = [[0] * npts for _ in events]
    fails = [[0] * npts for _ in events]
    mono = [0] * ne
    dominated = 0
    for i in range(lo, hi):
        s = rng.sample_seed(seed, i)
        vals = [[False] * npts for _ in events]
        for b, p in enumerate(ps):
            for a, ev in enumerate(events):
                if p <= 0.0:
                    v, ok = False, True
                else:
                    lc = LocalClock(d, R, s, p, kappa)
                    v = _EVAL[ev](lc, n)
                    ok = lc.certified
                vals[a][b] = v
                if not ok:
                    fails[a][b] += 1
                    if strict:
                        continue
                valid[a][b] += 1
                hits[a][b] += v
        for a in range(ne):
            row = vals[a]
            mono[a] += sum(1 for x, y in zip(row, row[1:]) if x and not y)
        if "theta" in events and "tau" in events:
            th, ta = vals[events.index("theta")], vals[events.index("tau")]
            dominated += sum(1 for x, y in zip(th, ta) if x and not y)
    return hits, valid, fails, mono, dominated


def _run(events, d, kappa, n, ps, samples, seed, margin, threads, strict, budget):
    R = n + margin
    _budget(d, R, samples * len(ps) * len(events), budget)
    tasks = [(tuple(events), d, R, kappa, n, tuple(ps), seed, lo, min(lo + CHUNK, samples), strict)
             for lo in range(0, samples, CHUNK)]
    threads = threads or default_threads()
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_work, tasks))
    else:
        parts = [_work(t) for t in tasks]
    ne, npts = len(events), len(ps)
    hits = np.zeros((ne, npts), dtype=np.int64)
    valid = np.zeros((ne, npts), dtype=np.int64)
    fails = np.zeros((ne, npts), dtype=np.int64)
    mono = np.zeros(ne, dtype=np.int64)
    dom = 0
    for h, v, f, mo, dm in parts:
        hits += h
        valid += v
        fails += f
        mono += mo
        dom += dm
    ests = [[make_estimate(int(hits[a, b]), int(valid[a, b]), int(fails[a, b]), samples,
                           samples - int(valid[a, b]))
             for b in range(npts)] for a in range(ne)]
    return ests, mono.tolist(), dom


def estimate_event(event, d, kappa, n, p, samples, seed, margin=DEFAULT_MARGIN,
                   threads=None, strict=False, budget=DEFAULT_BUDGET):
    """Estimate ``theta_n(p)`` or ``tau_n(p)`` on the ball of radius ``n + margin``.

    In strict mode samples whose determination certificate fails are
    discarded (their number is reported as ``rejected``).
    """
    _check(event, d, kappa, n, p, samples, margin)
    ests, _, _ = _run([event], d, kappa, n, [p], samples, seed, margin, threads, strict, budget)
    return ests[0][0]


def estimate_pair(d, kappa, n, p, samples, seed, margin=DEFAULT_MARGIN, threads=None,
                  budget=DEFAULT_BUDGET):
    """Both events on shared clocks; returns ``(theta, tau, violations of theta <= tau)``."""
    _check("tau", d, kappa, n, p, samples, margin)
    ests, _, dom = _run(["theta", "tau"], d, kappa, n, [p], samples, seed, margin, threads,
                        False, budget)
    return ests[0][0], ests[1][0], dom


def sweep_p(event, d, kappa, n, p_grid, samples, seed, margin=DEFAULT_MARGIN, threads=None,
            strict=False, budget=DEFAULT_BUDGET):
    """Estimates over an increasing p grid on coupled clocks.

    ``violations`` counts samples on which the event held at some grid point
    and failed at the next one; it is zero when the coupling is monotone.
    """
    grid = [float(p) for p in p_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("p grid must be non-empty and strictly increasing")
    for p in grid:
        _check(event, d, kappa, n, p, samples, margin)
    ests, mono, _ = _run([event], d, kappa, n, grid, samples, seed, margin, threads, strict,
                         budget)
    meta = {"event": event, "d": d, "kappa": kappa, "n": n, "margin": margin, "seed": seed,
            "samples": samples}
    return SweepResult("p", grid, ests[0], meta, mono[0])


def sweep_n(event, d, kappa, p, n_grid, samples, seed, margin=DEFAULT_MARGIN, threads=None,
            strict=False, budget=DEFAULT_BUDGET):
    """Estimates over an increasing n grid, sharing the clock seeds across n."""
    grid = [int(n) for n in n_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("n grid must be non-empty and strictly increasing")
    ests = [estimate_event(event, d, kappa, n, p, samples, seed, margin, threads, strict, budget)
            for n in grid]
    meta = {"event": event, "d": d, "kappa": kappa, "p": p, "margin": margin, "seed": seed,
            "samples": samples}
    return SweepResult("n", grid, ests, meta)


@dataclass
class DecayFit:
    rate: float
    intercept: float
    r_squared: float
    used: list
    excluded: list
    sweep: SweepResult

    def to_dict(self):
        return {
            "rate": self.rate,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "used_n": self.used,
            "excluded_n": self.excluded,
            "sweep": self.sweep.to_dict(),
        }


def fit_log_linear(ns, values):
    """Least-squares line through ``(n, log value)``; returns ``(slope, intercept, r2)``."""
    x = np.asarray(ns, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def decay_fit(event, d, kappa, p, n_grid, samples, seed, margin=DEFAULT_MARGIN, threads=None,
              strict=False, budget=DEFAULT_BUDGET):
    """Fit ``log estimate_n = -rate * n + c``; zero estimates are excluded and flagged."""
    sw = sweep_n(event, d, kappa, p, n_grid, samples, seed, margin, threads, strict, budget)
    used = [n for n, e in zip(sw.grid, sw.estimates) if e.value > 0]
    excluded = [n for n in sw.grid if n not in used]
    if len(used) < 2:
        return DecayFit(float("nan"), float("nan"), float("nan"), used, excluded, sw)
    vals = [e.value for n, e in zip(sw.grid, sw.estimates) if n in used]
    slope, intercept, r2 = fit_log_linear(used, vals)
    return DecayFit(-slope, intercept, r2, used, excluded, sw)


def pc_bracket(d, kappa, n_list, p_tolerance, samples, seed, margin=DEFAULT_MARGIN,
               threads=None, level=0.5, budget=DEFAULT_BUDGET):
    """Heuristic finite-size crossing points of ``theta_n``.

    For each n, bisect on p for the point where the estimate crosses
    ``level * theta_n(1)``.  The bracket is the range of crossings over n;
    it is a drift diagnostic and not a bound on the critical point.
    """
    ns = [int(n) for n in n_list]
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
        raise DomainError("n list must be non-empty and strictly increasing")
    if not 0 < p_tolerance < 1:
        raise DomainError("p tolerance must lie in (0, 1)")
    rows = []
    for n in ns:
        def est(p):
            return estimate_event("theta", d, kappa, n, p, samples, seed, margin, threads,
                                  budget=budget).value

        top = est(1.0)
        target = level * top
        if top == 0.0:
            rows.append({"n": n, "theta_at_1": top, "crossing": None, "empty": True})
            continue
        lo, hi = 0.0, 1.0
        while hi - lo > p_tolerance:
            mid = (lo + hi) / 2
            if est(mid) >= target:
                hi = mid
            else:
                lo = mid
        rows.append({"n": n, "theta_at_1": top, "crossing": (lo + hi) / 2,
                     "interval": [lo, hi], "empty": False})
    xs = [r["crossing"] for r in rows if r["crossing"] is not None]
    return {
        "heuristic": True,
        "level": level,
        "per_n": rows,
        "bracket": [min(xs), max(xs)] if xs else None,
        "drift": xs[-1] - xs[0] if len(xs) > 1 else 0.0,
        "empty": not xs,
    }
