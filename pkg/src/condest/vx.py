"""Lazily drawn target set with a membership-query interface.

Initialization costs nothing and records nothing; each new membership query
runs one canonical pairwise test and caches the answer, so repeated queries
are consistent and free.  Only the first q queries carry a distributional
guarantee; later ones are still answered but flip the over-budget flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .oracle import OracleSession
from .profiles import Profile
from .target import target_test, target_test_batch

__all__ = ["VxObject", "initialize_new_vx", "vx_query", "vx_query_batch"]


@dataclass
class VxObject:
    """Membership view of one secret draw of the target set around `anchor`."""

    profile: Profile
    anchor: int
    budget: int
    hist: list = field(default_factory=list)   # (element id, answer) pairs, append-only
    queries: int = 0
    _index: dict = field(default_factory=dict)

    @property
    def over_budget(self) -> bool:
        return self.queries > self.budget

    def _lookup(self, y: int):
        return self._index.get(y)

    def _record(self, y: int, ans: bool) -> None:
        self.hist.append((y, ans))
        self._index[y] = ans


def initialize_new_vx(profile: Profile, x: int, q: int) -> VxObject:
    """Fresh lazily-drawn set: empty history, zero sample cost."""
    if q < 0:
        raise ValueError("query budget must be >= 0")
    return VxObject(profile=profile, anchor=x, budget=q)


def vx_query(session: OracleSession, obj: VxObject, y: int) -> bool:
    """Is y a member?  The anchor never is; cached answers replay for free;
    a new element costs one canonical pairwise test."""
    obj.queries += 1
    if y == obj.anchor:
        return False
    cached = obj._lookup(y)
    if cached is not None:
        return cached
    ans = target_test(session, obj.anchor, y, obj.profile)
    obj._record(y, ans)
    return ans


def vx_query_batch(session: OracleSession, obj: VxObject, ys: np.ndarray) -> np.ndarray:
    """Vectorized membership for a batch of queries (one test per new id).

    Duplicate ids within the batch resolve to a single test, matching the
    sequential semantics of repeated queries.
    """
    ys = np.asarray(ys, dtype=np.int64)
    obj.queries += ys.size
    uniq, inverse = np.unique(ys, return_inverse=True)
    unknown = [int(y) for y in uniq if y != obj.anchor and obj._lookup(int(y)) is None]
    if unknown:
        new_ids = np.asarray(unknown, dtype=np.int64)
        answers = target_test_batch(
            session, obj.anchor, new_ids, obj.profile.target_eta, obj.profile.ell_multiplier
        )
        for y, a in zip(new_ids, answers):
            obj._record(int(y), bool(a))
    uniq_ans = np.asarray(
        [False if int(y) == obj.anchor else obj._index[int(y)] for y in uniq], dtype=bool
    )
    return uniq_ans[inverse]
