"""Counter-based hashing used for every random draw in the package.

Clock values are a pure function of ``(seed, edge coordinates)``, so a clock
restricted to a smaller ball agrees with the same clock on a larger ball, and
results never depend on iteration order or on how samples are split across
workers.
"""

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INIT = 0x243F6A8885A308D3
_SAMPLE_TAG = 0x5A17
_ALGO_TAG = 0xA160


def splitmix64(x):
    x = (x + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def mix(*words):
    """Hash a sequence of (possibly negative) integers to a 64-bit word."""
    h = _INIT
    for w in words:
        h = splitmix64(h ^ (w & MASK64))
    return h


def to_unit(h):
    """Map a 64-bit word to a float in the open interval (0, 1)."""
    return ((h >> 11) + 0.5) * 2.0**-53


def edge_uniform(seed, low, axis, redraw=0):
    """Clock value of the edge ``low -- low + e_axis`` under ``seed``."""
    h = mix(seed, *low, axis)
    if redraw:
        h = mix(h, redraw)
    return to_unit(h)


def sample_seed(seed, index):
    """Seed of the ``index``-th Monte Carlo sample of a run."""
    return mix(seed, index, _SAMPLE_TAG)


def algorithm_seed(seed, index):
    """Seed for algorithm randomness, decoupled from the clock seed."""
    return mix(seed, index, _ALGO_TAG)


# vectorised twins -- must agree bit-for-bit with the scalar versions


def _splitmix64_np(x):
    x = x + np.uint64(_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_M1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


def edge_uniform_np(seed, lows, axes, redraw=None):
    """Vectorised :func:`edge_uniform` over rows of ``lows`` (shape (E, d))."""
    lows = np.asarray(lows, dtype=np.int64)
    n = lows.shape[0]
    with np.errstate(over="ignore"):
        h = np.full(n, _INIT, dtype=np.uint64)
        h = _splitmix64_np(h ^ np.uint64(seed & MASK64))
        for col in lows.T:
            h = _splitmix64_np(h ^ col.view(np.uint64))
        h = _splitmix64_np(h ^ np.asarray(axes, dtype=np.int64).view(np.uint64))
        if redraw is not None:
            r = np.asarray(redraw, dtype=np.int64)
            again = r != 0
            if again.any():
                h2 = _splitmix64_np(np.full(n, _INIT, dtype=np.uint64) ^ h)
                h2 = _splitmix64_np(h2 ^ r.view(np.uint64))
                h = np.where(again, h2, h)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
