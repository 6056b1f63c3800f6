"""Arrangements, event polynomials and the brute-force enumerator.

Any event measurable with respect to ``(U_e 1{U_e <= p})`` only sees which
edges lie below ``p`` and their relative order.  One such arrangement with
``k`` edges below has probability ``p^k (1-p)^(m-k) / k!``, so the
probability of the event is a polynomial in ``p`` with integer counts.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..dynamics import ClockField
from ..lattice import DomainError

DEFAULT_BUDGET = 10
MAX_BUDGET = 12


class BudgetError(RuntimeError):
    """The requested enumeration exceeds the configured budget."""


def arrangement_count(m):
    """Number of arrangements of ``m`` edges: sum over k of m!/(m-k)!."""
    return sum(math.perm(m, k) for k in range(m + 1))


def check_budget(m, budget=DEFAULT_BUDGET):
    if budget > MAX_BUDGET:
        raise BudgetError(f"budget {budget} exceeds the hard cap of {MAX_BUDGET} edges")
    if m > budget:
        raise BudgetError(
            f"{m} free edges need {arrangement_count(m):,} arrangements; "
            f"budget allows {budget} edges ({arrangement_count(budget):,})"
        )


@dataclass(frozen=True)
class Arrangement:
    """Edges below p in increasing clock order, and the set of edges above p."""

    below: tuple
    above: frozenset

    def __post_init__(self):
        if len(set(self.below)) != len(self.below):
            raise DomainError("arrangement lists an edge twice below p")
        if set(self.below) & self.above:
            raise DomainError("arrangement puts an edge both below and above p")


def arrangement_of(clock, p):
    """The arrangement realised by ``clock`` at threshold ``p``."""
    region = clock.region
    u = clock.ulist
    below = tuple(region.edges[j] for j in clock.order if u[j] <= p)
    above = frozenset(region.edges[j] for j in range(region.num_edges) if u[j] > p)
    return Arrangement(below, above)


def representative_clock(a, p, region, jitter=None):
    """A clock realising arrangement ``a``.

    Below values are ``p (i+1)/(k+1)`` in order, above values are spread
    evenly over ``(p, 1)`` in canonical edge order.  With ``jitter`` (a
    numpy Generator) the values are drawn at random instead, preserving the
    arrangement; this gives alternative representatives for invariance
    audits.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    below = [region.eid(e) for e in a.below]
    above = sorted(region.eid(e) for e in a.above)
    if len(below) + len(above) != region.num_edges or set(below) & set(above):
        raise DomainError("arrangement does not partition the region's edges")
    u = np.empty(region.num_edges)
    k = len(below)
    if jitter is None:
        lo = [p * (i + 1) / (k + 1) for i in range(k)]
        hi = [p + (1 - p) * (i + 1) / (len(above) + 1) for i in range(len(above))]
    else:
        lo = np.sort(jitter.uniform(0.0, p, size=k)).tolist()
        hi = jitter.uniform(p, 1.0, size=len(above)).tolist()
        hi = [min(max(x, np.nextafter(p, 1.0)), np.nextafter(1.0, 0.0)) for x in hi]
    u[below] = lo
    u[above] = hi
    return ClockField(region, u)


class EventPolynomial:
    """Exact arrangement counts of an event over ``m`` iid clocks.

    ``counts[k]`` is the number of satisfying arrangements with ``k`` edges
    below p; the probability is ``sum_k counts[k] p^k (1-p)^(m-k) / k!``.
    """

    def __init__(self, m, counts):
        counts = [int(c) for c in counts]
        if len(counts) != m + 1:
            raise ValueError(f"expected {m + 1} counts, got {len(counts)}")
        for k, c in enumerate(counts):
            if not 0 <= c <= math.perm(m, k):
                raise ValueError(f"count {c} at k={k} outside [0, {math.perm(m, k)}]")
        self.m = m
        self.counts = counts

    def __repr__(self):
        return f"EventPolynomial(m={self.m}, counts={self.counts})"

    def __eq__(self, other):
        return isinstance(other, EventPolynomial) and (self.m, self.counts) == (other.m, other.counts)

    def __add__(self, other):
        if self.m != other.m:
            raise ValueError("cannot add polynomials over different edge counts")
        return EventPolynomial(self.m, [a + b for a, b in zip(self.counts, other.counts)])

    def exact(self, p):
        """Probability at ``p`` as a Fraction (``p`` converted exactly)."""
        p = Fraction(p)
        q = 1 - p
        m = self.m
        return sum(
            (Fraction(c, math.factorial(k)) * p**k * q ** (m - k)
             for k, c in enumerate(self.counts) if c),
            Fraction(0),
        )

    def derivative(self, p):
        """Exact derivative in ``p`` as a Fraction."""
        p = Fraction(p)
        q = 1 - p
        m = self.m
        out = Fraction(0)
        for k, c in enumerate(self.counts):
            if not c:
                continue
            w = Fraction(c, math.factorial(k))
            if k:
                out += w * k * p ** (k - 1) * q ** (m - k)
            if m - k:
                out -= w * (m - k) * p**k * q ** (m - k - 1)
        return out

    def __call__(self, p):
        return float(self.exact(p))

    def to_dict(self):
        return {"m": self.m, "counts": [str(c) for c in self.counts]}


def iter_arrangements(ids):
    """Below-tuples over ``ids``: by size, then subset, then permutation, lexicographically."""
    ids = sorted(ids)
    for k in range(len(ids) + 1):
        for subset in itertools.combinations(ids, k):
            yield from itertools.permutations(subset)


def event_polynomial(region, predicate, p=0.5, free=None, budget=DEFAULT_BUDGET):
    """Exact polynomial of ``predicate`` by evaluating every arrangement.

    Parameters
    ----------
    predicate : callable
        ``predicate(clock, p) -> bool``; must depend on the clock only
        through its arrangement at ``p``.
    free : iterable of edge ids, optional
        Enumerate over these edges only; the others are held above ``p``.
        The polynomial is then in ``len(free)`` variables.
    """
    free = list(range(region.num_edges)) if free is None else sorted(region.eid(e) for e in free)
    m = len(free)
    check_budget(m, budget)
    counts = [0] * (m + 1)
    total = region.num_edges
    for below in iter_arrangements(free):
        k = len(below)
        u = np.empty(total)
        inset = set(below)
        above = [j for j in range(total) if j not in inset]
        u[above] = [p + (1 - p) * (i + 1) / (len(above) + 1) for i in range(len(above))]
        u[list(below)] = [p * (i + 1) / (k + 1) for i in range(k)]
        clock = ClockField(region, u, check=False)
        if predicate(clock, p):
            counts[k] += 1
    return EventPolynomial(m, counts)
