"""Simulated sampling and conditional-sampling oracles with exact accounting.

A session owns a distribution, a seeded RNG stream, and per-phase sample
counters.  Every logical sample (one oracle call, or one of the n draws in a
batched pair query) increments exactly one counter.  Sessions are
single-owner: counters and the RNG mutate; independent sessions with
independent seeds may run concurrently.

Condition sets come in three shapes: an explicit id list, an unordered pair,
and a pseudo-random alpha-filter union (each non-anchor element is a member
iff hash64(filter_seed, y)/2^64 < alpha, so membership is deterministic per
(seed, alpha) and never materialized up front).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .dist import Distribution

__all__ = [
    "ZeroPolicy",
    "ErrSymbol",
    "ERR_SYMBOL",
    "ZeroMassError",
    "BudgetExceeded",
    "SampleBudget",
    "Explicit",
    "Pair",
    "FilterUnion",
    "filter_contains",
    "OracleSession",
    "sample",
    "sample_conditional",
    "conditional_mass",
    "read_counters",
    "hash64",
]

_U64 = np.uint64
_GOLD = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_FULL = float(2**64)


def hash64(seed: int, ids) -> np.ndarray:
    """SplitMix64 finalizer over (seed, id) pairs; vectorized, wraps mod 2^64."""
    arr = np.asarray(ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _U64(seed & 0xFFFFFFFFFFFFFFFF) + arr * _GOLD
        z = (z ^ (z >> _U64(30))) * _MIX1
        z = (z ^ (z >> _U64(27))) * _MIX2
        z = z ^ (z >> _U64(31))
    return z


def _filter_mask(seed: int, ids, alpha: float) -> np.ndarray:
    if alpha >= 1.0:
        return np.ones(np.asarray(ids).shape, dtype=bool)
    if alpha <= 0.0:
        return np.zeros(np.asarray(ids).shape, dtype=bool)
    thresh = _U64(int(alpha * _FULL))
    return hash64(seed, ids) < thresh


def _filter_mask_matrix(seeds, ids, alpha: float) -> np.ndarray:
    """Membership masks for a batch of filter seeds over one id vector."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    ids = np.asarray(ids, dtype=np.uint64)
    if alpha >= 1.0:
        return np.ones((seeds.size, ids.size), dtype=bool)
    if alpha <= 0.0:
        return np.zeros((seeds.size, ids.size), dtype=bool)
    thresh = _U64(int(alpha * _FULL))
    with np.errstate(over="ignore"):
        z = seeds[:, None] + (ids * _GOLD)[None, :]
        z = (z ^ (z >> _U64(30))) * _MIX1
        z = (z ^ (z >> _U64(27))) * _MIX2
        z = z ^ (z >> _U64(31))
    return z < thresh


class ZeroPolicy(enum.Enum):
    """Behavior when a zero-mass set is conditioned on."""

    ERROR_SYMBOL = "error_symbol"
    UNIFORM_FALLBACK = "uniform_fallback"


class ErrSymbol:
    """Singleton error symbol returned for zero-mass conditions."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ERR_SYMBOL"


ERR_SYMBOL = ErrSymbol()


class ZeroMassError(RuntimeError):
    """A batched query hit a zero-mass condition set under the error policy."""


class BudgetExceeded(RuntimeError):
    """The session's shared sample budget ran out."""


class SampleBudget:
    """Shared cumulative sample cap; raises once the cap is crossed."""

    def __init__(self, limit: int):
        self.limit = int(limit)
        self.used = 0

    def charge(self, n: int) -> None:
        if self.used + n > self.limit:
            self.used = self.limit
            raise BudgetExceeded(f"sample budget {self.limit} exhausted")
        self.used += n


@dataclass(frozen=True)
class Explicit:
    """Condition on an explicit list of element ids."""

    members: tuple[int, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("condition set must be non-empty")


@dataclass(frozen=True)
class Pair:
    """Condition on the unordered pair {x, y}."""

    x: int
    y: int


@dataclass(eq=False)
class FilterUnion:
    """Condition on A_alpha ∪ {anchor} ∪ extras, with A_alpha realized lazily
    through a keyed hash instead of materializing a subset of the domain.

    The anchor and extras are always members; membership for everything else
    is the deterministic hash predicate, so repeated queries in one session
    are consistent.
    """

    filter_seed: int
    alpha: float
    anchor: int
    extras: tuple[int, ...] = ()

    # Materialization cache (per distribution object) for batch sampling.
    _mat_key: object = field(default=None, repr=False, compare=False)
    _mat: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must be in [0, 1]")


def filter_contains(c: FilterUnion, y: int) -> bool:
    """Membership predicate of a FilterUnion (no sampling, no cost)."""
    if y == c.anchor or y in c.extras:
        return True
    return bool(_filter_mask(c.filter_seed, np.asarray([y], dtype=np.int64), c.alpha)[0])


class _Materialized:
    """Positive-mass members of a condition set with a cumulative table for
    inverse-transform draws."""

    __slots__ = ("ids", "cum", "total")

    def __init__(self, ids: np.ndarray, weights: np.ndarray):
        self.ids = ids
        self.cum = np.cumsum(weights)
        self.total = float(self.cum[-1]) if ids.size else 0.0

    def draw(self, rng: np.random.Generator, k: int) -> np.ndarray:
        u = rng.random(k) * self.total
        return self.ids[np.searchsorted(self.cum, u, side="right")]


def _materialize(d: Distribution, c) -> _Materialized:
    """Member ids with positive mass, plus the always-member anchor/extras."""
    if isinstance(c, Explicit):
        ids = np.unique(np.asarray(c.members, dtype=np.int64))
    elif isinstance(c, Pair):
        ids = np.unique(np.asarray([c.x, c.y], dtype=np.int64))
    elif isinstance(c, FilterUnion):
        if c._mat_key is d and c._mat is not None:
            return c._mat
        sup = d.support.astype(np.int64)
        mask = _filter_mask(c.filter_seed, sup, c.alpha)
        always = np.asarray([c.anchor, *c.extras], dtype=np.int64)
        ids = np.unique(np.concatenate([sup[mask], always]))
        mat = _Materialized(ids, d.mass_of(ids))
        c._mat_key = d
        c._mat = mat
        return mat
    else:
        raise TypeError(f"not a condition set: {c!r}")
    for i in ids:
        d._check_id(int(i))
    return _Materialized(ids, d.mass_of(ids))


def _all_members(d: Distribution, c) -> np.ndarray:
    """Every member id, including zero-mass ones (uniform-fallback support)."""
    if isinstance(c, Explicit):
        return np.unique(np.asarray(c.members, dtype=np.int64))
    if isinstance(c, Pair):
        return np.unique(np.asarray([c.x, c.y], dtype=np.int64))
    ids = np.arange(1, d.n + 1, dtype=np.int64)
    mask = _filter_mask(c.filter_seed, ids, c.alpha)
    always = np.asarray([c.anchor, *c.extras], dtype=np.int64)
    return np.unique(np.concatenate([ids[mask], always]))


class OracleSession:
    """A seeded sampling session over one distribution.

    Counters map phase labels to conditional-sample counts; identical
    (seed, call sequence) pairs replay identically.
    """

    def __init__(self, dist: Distribution, seed, zero_policy: ZeroPolicy = ZeroPolicy.ERROR_SYMBOL):
        self.dist = dist
        self.rng = np.random.default_rng(seed)
        self.zero_policy = zero_policy
        self.counters: dict[str, int] = {}
        self.events: dict[str, int] = {}
        self.zero_mass_requests = 0
        self._phase: str | None = None
        self._budget: SampleBudget | None = None

    # ----- accounting ---------------------------------------------------------

    def count(self, n: int) -> None:
        """Record n logical samples under the active phase label.

        With a budget attached, only the draws up to the cap are recorded
        before the exhaustion error propagates, matching a sequential process
        that stops on its last allowed sample.
        """
        label = self._phase or "default"
        if self._budget is not None:
            allowed = min(n, self._budget.limit - self._budget.used)
            self._budget.used += allowed
            self.counters[label] = self.counters.get(label, 0) + allowed
            if allowed < n:
                raise BudgetExceeded(f"sample budget {self._budget.limit} exhausted")
            return
        self.counters[label] = self.counters.get(label, 0) + n

    def phase(self, label: str):
        """Scoped phase labeling; nesting is a contract violation."""
        return _Phase(self, label)

    def total_samples(self) -> int:
        return sum(self.counters.values())

    def set_budget(self, budget: SampleBudget | None) -> None:
        self._budget = budget

    # ----- sampling -----------------------------------------------------------

    def sample(self) -> int:
        self.count(1)
        return int(self.dist.sample_ids(self.rng, 1)[0])

    def sample_many(self, k: int) -> np.ndarray:
        """k unconditional draws, counted as k samples."""
        self.count(k)
        return self.dist.sample_ids(self.rng, k)

    def sample_conditional(self, c):
        """One draw from mu conditioned on membership in c.

        Zero-mass sets follow the session policy: the error symbol, or a
        uniform draw over the members.  Either way the call costs one sample.
        """
        self.count(1)
        mat = _materialize(self.dist, c)
        if mat.total <= 0.0:
            return self._zero_mass(c)
        return int(mat.draw(self.rng, 1)[0])

    def sample_conditional_many(self, c, k: int) -> np.ndarray:
        self.count(k)
        mat = _materialize(self.dist, c)
        if mat.total <= 0.0:
            raise ZeroMassError("batched draw from a zero-mass condition set")
        return mat.draw(self.rng, k)

    def conditional_mass(self, c) -> float:
        """Exact mu(c); simulation-internal, free of sample cost."""
        return _materialize(self.dist, c).total

    def count_pair_hits(self, x: int, y: int, n: int) -> int:
        """Number of times y comes up among n draws conditioned on {x, y}.

        Statistically identical to n sequential conditional draws (the count
        is binomial); the counter advances by n.
        """
        self.dist._check_id(x)
        self.dist._check_id(y)
        self.count(n)
        wx, wy = self.dist.mass(x), self.dist.mass(y)
        tot = wx + wy
        if tot <= 0.0:
            self.zero_mass_requests += 1
            if self.zero_policy is ZeroPolicy.ERROR_SYMBOL:
                raise ZeroMassError(f"pair {{{x},{y}}} has zero mass")
            p = 0.5
        else:
            p = wy / tot
        return int(self.rng.binomial(n, p))

    def count_pair_hits_many(self, x: int, ys: np.ndarray, n: int) -> np.ndarray:
        """Vector of y-hit counts for independent n-draw pair queries
        {x, ys[j]}; the counter advances by n per query."""
        self.dist._check_id(x)
        ys = np.asarray(ys, dtype=np.int64)
        self.count(n * ys.size)
        wx = self.dist.mass(x)
        wy = self.dist.mass_of(ys)
        tot = wx + wy
        if np.any(tot <= 0.0):
            self.zero_mass_requests += int(np.count_nonzero(tot <= 0.0))
            if self.zero_policy is ZeroPolicy.ERROR_SYMBOL:
                raise ZeroMassError("pair query with zero total mass")
            p = np.where(tot > 0.0, wy / np.where(tot > 0.0, tot, 1.0), 0.5)
        else:
            p = wy / tot
        return self.rng.binomial(n, p)

    def fresh_filter(self, alpha: float, anchor: int, extras: tuple[int, ...] = ()) -> FilterUnion:
        """Draw a fresh alpha-filter (new filter seed from the session stream)."""
        seed = int(self.rng.integers(0, 2**63 - 1))
        return FilterUnion(filter_seed=seed, alpha=alpha, anchor=anchor, extras=extras)

    # ----- internals ----------------------------------------------------------

    def _zero_mass(self, c):
        self.zero_mass_requests += 1
        if self.zero_policy is ZeroPolicy.ERROR_SYMBOL:
            return ERR_SYMBOL
        members = _all_members(self.dist, c)
        return int(members[self.rng.integers(0, members.size)])


class _Phase:
    def __init__(self, session: OracleSession, label: str):
        self.session = session
        self.label = label

    def __enter__(self):
        if self.session._phase is not None:
            raise RuntimeError(
                f"phase {self.label!r} entered while {self.session._phase!r} is active"
            )
        self.session._phase = self.label
        return self

    def __exit__(self, *exc):
        self.session._phase = None
        return False


# Module-level wrappers matching the operation names of the public surface.

def sample(session: OracleSession) -> int:
    return session.sample()


def sample_conditional(session: OracleSession, c):
    return session.sample_conditional(c)


def conditional_mass(session: OracleSession, c) -> float:
    return session.conditional_mass(c)


def read_counters(session: OracleSession) -> dict[str, int]:
    return dict(session.counters)
