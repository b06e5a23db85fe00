"""Finite distributions over {1..N}: derived quantities, distances, generators.

Element ids are 1-based throughout the public API; arrays are 0-based
internally.  Weights are normalized exactly once at construction and never
renormalized downstream, so conditional masses stay consistent across queries.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Distribution",
    "ScalePartition",
    "DistanceReport",
    "make_distribution",
    "cdf_mu",
    "scale_partition",
    "tv_distance",
    "min_perm_tv",
    "gen_dk",
    "gen_named",
    "load_distribution",
    "save_distribution",
]

# Mass-ratio threshold separating "noticeably heavier" elements.
HEAVY_FACTOR = 1.2


class Distribution:
    """Immutable probability mass function over {1..N}.

    Safe to share across concurrent tasks; all mutation happens at
    construction time.
    """

    __slots__ = ("weights", "n", "_cum", "_support")

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-D vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        total = float(w.sum())
        if total <= 0.0:
            raise ValueError("at least one weight must be strictly positive")
        w = w / total
        self.weights = w
        self.weights.setflags(write=False)
        self.n = int(w.size)
        self._cum = np.cumsum(w)
        self._support = np.flatnonzero(w > 0.0) + 1  # 1-based ids

    def mass(self, x: int) -> float:
        """mu(x) for a 1-based element id."""
        self._check_id(x)
        return float(self.weights[x - 1])

    def mass_of(self, ids) -> np.ndarray:
        """Vector of masses for an array of 1-based ids (no range check)."""
        return self.weights[np.asarray(ids, dtype=np.int64) - 1]

    @property
    def support(self) -> np.ndarray:
        """1-based ids with positive mass (read-only view)."""
        return self._support

    def sample_ids(self, rng: np.random.Generator, k: int) -> np.ndarray:
        """k i.i.d. draws (1-based ids) by inverse transform."""
        u = rng.random(k)
        return np.searchsorted(self._cum, u, side="right") + 1

    def _check_id(self, x: int) -> None:
        if not (1 <= x <= self.n):
            raise ValueError(f"element id {x} out of range 1..{self.n}")

    def __eq__(self, other):
        return isinstance(other, Distribution) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.n, self.weights.tobytes()))

    def __repr__(self):
        return f"Distribution(n={self.n})"


@dataclass(frozen=True)
class ScalePartition:
    """Split of the domain relative to an anchor: elements no heavier than the
    anchor, a narrow band strictly between 1x and 1.2x its mass, and everything
    at least 1.2x as heavy."""

    anchor: int
    light: tuple[int, ...]
    medium: tuple[int, ...]
    heavy: tuple[int, ...]


@dataclass(frozen=True)
class DistanceReport:
    tv: float
    min_perm_tv: float


def make_distribution(weights) -> Distribution:
    """Normalize a non-negative weight vector into a Distribution.

    Rejects all-zero or negative input; element order is preserved.
    """
    return Distribution(weights)


def cdf_mu(d: Distribution, x: int) -> float:
    """Total mass of elements no heavier than x: Pr_{y~mu}[mu(y) <= mu(x)].

    This is the mass-ordering CDF, not the index-ordering one.
    """
    d._check_id(x)
    wx = d.weights[x - 1]
    return float(d.weights[d.weights <= wx].sum())


def scale_partition(d: Distribution, x: int) -> ScalePartition:
    """Partition the rest of the domain by mass relative to the anchor.

    Boundary rule: mu(y) = 1.2 mu(x) lands in the heavy set.
    """
    d._check_id(x)
    wx = d.weights[x - 1]
    light, medium, heavy = [], [], []
    for y in range(1, d.n + 1):
        if y == x:
            continue
        wy = d.weights[y - 1]
        if wy <= wx:
            light.append(y)
        elif wy < HEAVY_FACTOR * wx:
            medium.append(y)
        else:
            heavy.append(y)
    return ScalePartition(anchor=x, light=tuple(light), medium=tuple(medium), heavy=tuple(heavy))


def _check_same_domain(a: Distribution, b: Distribution) -> None:
    if a.n != b.n:
        raise ValueError(f"domain size mismatch: {a.n} vs {b.n}")


def tv_distance(a: Distribution, b: Distribution) -> float:
    """Total variation distance (1/2) sum |a(x) - b(x)|."""
    _check_same_domain(a, b)
    return float(0.5 * np.abs(a.weights - b.weights).sum())


def min_perm_tv(a: Distribution, b: Distribution) -> float:
    """Minimum of tv_distance(a, pi b) over all relabelings pi of b.

    Sorting both weight vectors in descending order and matching positionally
    realizes the minimum: for real vectors, sum |a_sigma(i) - b_i| is
    minimized by the monotone matching (verified exhaustively for N <= 7 in
    the test suite).  Used as the checkable surrogate for histogram closeness.
    """
    _check_same_domain(a, b)
    aw = np.sort(a.weights)[::-1]
    bw = np.sort(b.weights)[::-1]
    return float(0.5 * np.abs(aw - bw).sum())


def brute_min_perm_tv(a: Distribution, b: Distribution) -> float:
    """Exhaustive reference for min_perm_tv; only sane for N <= 7."""
    _check_same_domain(a, b)
    best = math.inf
    bw = b.weights
    for perm in itertools.permutations(range(a.n)):
        v = 0.5 * float(np.abs(a.weights - bw[list(perm)]).sum())
        best = min(best, v)
    return best


def distance_report(a: Distribution, b: Distribution) -> DistanceReport:
    return DistanceReport(tv=tv_distance(a, b), min_perm_tv=min_perm_tv(a, b))


def gen_dk(n: int, k: int, seed) -> Distribution:
    """Uniform distribution over a random support: each of the n elements is
    kept independently with probability 2^-k; redrawn whenever the support
    comes out empty (the benchmark family conditions on non-emptiness)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0 <= k <= math.log2(n) + 1e-9):
        raise ValueError(f"k must satisfy 0 <= k <= log2(n), got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    p = 2.0**-k
    while True:
        keep = rng.random(n) < p
        if keep.any():
            break
    w = np.zeros(n)
    w[keep] = 1.0
    return Distribution(w)


def gen_named(family: str, n: int, seed=None, *, s: float = 1.0, p: float = 0.5) -> Distribution:
    """Standard families for test corpora: uniform, zipf(s), geometric(p),
    point_mass.  All normalized over {1..n}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if family == "uniform":
        return Distribution(np.ones(n))
    if family == "point_mass":
        w = np.zeros(n)
        w[0] = 1.0
        return Distribution(w)
    if family == "zipf":
        if s <= 0:
            raise ValueError("zipf exponent must be positive")
        ids = np.arange(1, n + 1, dtype=np.float64)
        return Distribution(ids**-s)
    if family == "geometric":
        if not (0.0 < p < 1.0):
            raise ValueError("geometric parameter must be in (0,1)")
        ids = np.arange(n, dtype=np.float64)
        return Distribution((1.0 - p) ** ids * p)
    raise ValueError(f"unknown family {family!r}")


def load_distribution(path) -> Distribution:
    """Read a distribution file: either one weight per line (dense) or
    `id weight` pairs (sparse, domain size = max id).  Lines starting with
    '#' and blank lines are ignored."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (1, 2):
                raise ValueError(f"{path}:{lineno}: expected 1 or 2 fields, got {len(parts)}")
            rows.append((lineno, parts))
    if not rows:
        raise ValueError(f"{path}: no data lines")
    widths = {len(parts) for _, parts in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: mixed dense and sparse lines")
    if widths == {1}:
        return Distribution([float(parts[0]) for _, parts in rows])
    entries = {}
    for lineno, (i_s, w_s) in ((ln, ps) for ln, ps in rows):
        i = int(i_s)
        if i < 1:
            raise ValueError(f"{path}:{lineno}: id must be >= 1")
        if i in entries:
            raise ValueError(f"{path}:{lineno}: duplicate id {i}")
        entries[i] = float(w_s)
    n = max(entries)
    w = np.zeros(n)
    for i, v in entries.items():
        w[i - 1] = v
    return Distribution(w)


def save_distribution(d: Distribution, path, *, sparse: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if sparse:
            for i in d.support:
                fh.write(f"{int(i)} {float(d.weights[int(i) - 1])!r}\n")
            if d.weights[-1] == 0.0:
                fh.write(f"{d.n} 0.0\n")
        else:
            for w in d.weights:
                fh.write(f"{float(w)!r}\n")
