"""Finite l1 balls of Z^d with free boundary.

Vertices are integer tuples, edges are canonical pairs ``(a, b)`` with ``a``
lexicographically smaller than ``b``.  A :class:`BoxRegion` numbers both in
lexicographic order; the integer ids are what the hot loops use.
"""

import functools
import itertools

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


def norm1(v):
    return sum(abs(c) for c in v)


def canonical_edge(a, b):
    a, b = tuple(a), tuple(b)
    if norm1(tuple(x - y for x, y in zip(a, b))) != 1:
        raise DomainError(f"{a} and {b} are not nearest neighbours")
    return (a, b) if a < b else (b, a)


def edge_distance(e, f):
    """Minimum l1 distance between an endpoint of ``e`` and one of ``f``."""
    return min(norm1(tuple(x - y for x, y in zip(u, v))) for u in e for v in f)


class BoxRegion:
    """The ball ``{x : |x|_1 <= R}`` in Z^d and the edges inside it.

    Attributes
    ----------
    vertices : list of tuple
        Lexicographically sorted.
    edges : list of (tuple, tuple)
        Canonical edges, lexicographically sorted.
    ea, eb : list of int
        Endpoint vertex ids of each edge (``ea[j]`` is the smaller endpoint).
    incident : list of list of int
        Edge ids at each vertex, ascending.
    """

    def __init__(self, d, R):
        if int(d) != d or d < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {d}")
        if int(R) != R or R < 0:
            raise DomainError(f"radius must be a non-negative integer, got {R}")
        self.d = int(d)
        self.R = int(R)
        verts = [v for v in itertools.product(range(-R, R + 1), repeat=d) if norm1(v) <= R]
        verts.sort()
        self.vertices = verts
        self.index = {v: i for i, v in enumerate(verts)}
        self.norm = [norm1(v) for v in verts]
        self.origin = self.index[(0,) * d]

        edges = []
        for v in verts:
            for axis in range(d):
                w = v[:axis] + (v[axis] + 1,) + v[axis + 1:]
                if w in self.index:
                    edges.append((v, w, axis))
        edges.sort()
        self.edges = [(a, b) for a, b, _ in edges]
        self.axis = [ax for _, _, ax in edges]
        self.edge_index = {e: j for j, e in enumerate(self.edges)}
        self.ea = [self.index[a] for a, _ in self.edges]
        self.eb = [self.index[b] for _, b in self.edges]
        self.incident = [[] for _ in verts]
        for j, (a, b) in enumerate(zip(self.ea, self.eb)):
            self.incident[a].append(j)
            self.incident[b].append(j)
        self.adjacent_edges = [
            sorted(set(self.incident[a] + self.incident[b]) - {j})
            for j, (a, b) in enumerate(zip(self.ea, self.eb))
        ]
        self.nbr = [
            sorted(self.eb[j] if self.ea[j] == i else self.ea[j] for j in inc)
            for i, inc in enumerate(self.incident)
        ]
        self.edge_norm = [min(self.norm[a], self.norm[b]) for a, b in zip(self.ea, self.eb)]
        self.touches_outer = [
            self.norm[a] == R or self.norm[b] == R for a, b in zip(self.ea, self.eb)
        ]

    def __repr__(self):
        return f"BoxRegion(d={self.d}, R={self.R})"

    def __eq__(self, other):
        return isinstance(other, BoxRegion) and (self.d, self.R) == (other.d, other.R)

    def __hash__(self):
        return hash((self.d, self.R))

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_edges(self):
        return len(self.edges)

    def vid(self, v):
        """Vertex id of ``v`` (a tuple or an id)."""
        if isinstance(v, (int, np.integer)):
            return int(v)
        try:
            return self.index[tuple(v)]
        except KeyError:
            raise DomainError(f"vertex {tuple(v)} is outside {self}") from None

    def eid(self, e):
        """Edge id of ``e`` (a vertex pair or an id)."""
        if isinstance(e, (int, np.integer)):
            if not 0 <= e < self.num_edges:
                raise DomainError(f"edge id {e} out of range")
            return int(e)
        try:
            return self.edge_index[canonical_edge(*e)]
        except KeyError:
            raise DomainError(f"edge {e} is outside {self}") from None

    def edge(self, j):
        return self.edges[j]

    def other_end(self, j, i):
        return self.eb[j] if self.ea[j] == i else self.ea[j]

    def sphere_ids(self, r):
        if not 0 <= r <= self.R:
            raise DomainError(f"sphere radius {r} outside [0, {self.R}]")
        return [i for i, nv in enumerate(self.norm) if nv == r]

    def edge_lows(self):
        """Lower endpoints and axes of all edges, for clock hashing."""
        return np.array([a for a, _ in self.edges], dtype=np.int64).reshape(-1, self.d), \
            np.array(self.axis, dtype=np.int64)


@functools.lru_cache(maxsize=64)
def box(d, R):
    """Cached :class:`BoxRegion` constructor."""
    return BoxRegion(d, R)


def neighbors(v, region):
    """Neighbours of ``v`` inside ``region``, lexicographically ordered."""
    i = region.vid(v)
    return [region.vertices[w] for w in region.nbr[i]]


def sphere(r, region):
    """The vertices of ``region`` with l1 norm exactly ``r``."""
    return {region.vertices[i] for i in region.sphere_ids(r)}


def ball_size(d, R):
    """Number of lattice points with l1 norm at most ``R`` in Z^d."""
    from math import comb

    return sum(2**k * comb(d, k) * comb(R, k) for k in range(min(d, R) + 1))


def signed_permutations(d):
    """All 2^d d! coordinate symmetries of Z^d fixing the origin."""
    for perm in itertools.permutations(range(d)):
        for signs in itertools.product((1, -1), repeat=d):
            yield perm, signs


def edge_orbits(region):
    """Partition edge ids into orbits of the hyperoctahedral group.

    Returns a list of ``(representative, members)`` with the representative
    being the smallest id of its orbit.
    """
    seen = [False] * region.num_edges
    orbits = []
    maps = list(signed_permutations(region.d))
    for j in range(region.num_edges):
        if seen[j]:
            continue
        a, b = region.edges[j]
        members = set()
        for perm, signs in maps:
            ga = tuple(signs[k] * a[perm[k]] for k in range(region.d))
            gb = tuple(signs[k] * b[perm[k]] for k in range(region.d))
            members.add(region.edge_index[canonical_edge(ga, gb)])
        for k in members:
            seen[k] = True
        orbits.append((j, sorted(members)))
    return orbits
