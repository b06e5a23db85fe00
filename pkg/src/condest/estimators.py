"""Saturation-aware probability estimation and the filtered-density estimators.

An Estimate is either a positive float or the sentinel TOO_LOW (the estimator
gave up because the quantity sits below its working threshold).  TOO_LOW
orders below every real for median purposes.

The three filtered-density estimators share one sampling pattern: draw from
the distribution conditioned on (filter set) ∪ {anchor} until the anchor
comes up (indicator 0) or a pairwise test accepts (indicator 1), with a hard
iteration cap.  They are implemented as synchronized waves over many
independent rows, which is sample-for-sample equivalent to the sequential
loops and keeps the per-phase accounting exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oracle import FilterUnion, OracleSession, ZeroMassError
from .profiles import Profile
from .target import lightweight_ell
from .vx import VxObject, initialize_new_vx, vx_query_batch

__all__ = [
    "TOO_LOW",
    "TooLowType",
    "is_too_low",
    "median_estimate",
    "median_of",
    "BetaContext",
    "saturation_aware_est",
    "est_expected_beta",
    "est_single_beta",
    "h_of",
    "est_expected_h_beta",
]


class TooLowType:
    """Sentinel: the estimated quantity is below the give-up threshold."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TOO_LOW"


TOO_LOW = TooLowType()


def is_too_low(v) -> bool:
    return v is TOO_LOW


def median_estimate(values):
    """Median of estimates, with TOO_LOW ordered below every real."""
    s = sorted(values, key=lambda v: float("-inf") if v is TOO_LOW else v)
    return s[len(s) // 2]


def median_of(m: int, closure):
    """Median of m independent invocations (upper median when m is even)."""
    if m < 1:
        raise ValueError("median count must be a positive integer")
    return median_estimate([closure() for _ in range(m)])


@dataclass
class BetaContext:
    """One realized (filter, target-set) pair around an anchor."""

    x: int
    alpha: float
    filter: FilterUnion
    vx: VxObject

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must be in (0, 1]")


def saturation_aware_est(a: float, oracle, delta: float, *, coef: float = 48.0,
                         charge=None, chunk: int = 4096):
    """Estimate the mean p of an indicator oracle, giving up below ~a/12.

    Draws until M = ceil(coef/delta^2) successes or L = floor(6M/a) trials;
    returns M/trials on success and TOO_LOW on give-up.  With the reference
    coef=48 this is a (delta; a/12, a)-saturation-aware estimator, and
    E[1/p_hat | p_hat != TOO_LOW] <= 1/p.

    ``oracle(k)`` returns k i.i.d. indicator draws, either as a 0/1 array or
    as an (indicators, per-draw-costs) pair; only the consumed prefix of a
    chunk is charged through ``charge``.
    """
    if not (0.0 < a < 1.0):
        raise ValueError("threshold a must be in (0, 1)")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must be in (0, 1)")
    m_goal = math.ceil(coef / delta**2)
    limit = math.floor(6 * m_goal / a)
    m = 0
    trials = 0
    while m < m_goal and trials < limit:
        k = min(chunk, limit - trials)
        drawn = oracle(k)
        if isinstance(drawn, tuple):
            bits, costs = drawn
        else:
            bits, costs = drawn, None
        bits = np.asarray(bits)
        cum = np.cumsum(bits)
        hit = int(np.searchsorted(cum, m_goal - m))
        if hit < k:
            consumed = hit + 1
            m = m_goal
        else:
            consumed = k
            m += int(cum[-1]) if k else 0
        trials += consumed
        if charge is not None:
            if costs is None:
                charge(consumed)
            else:
                charge(int(np.asarray(costs)[:consumed].sum()))
    if m == m_goal:
        return m_goal / trials
    return TOO_LOW


def _filter_members_excl_anchor(session: OracleSession, x: int, seeds: np.ndarray,
                                alpha: float):
    """Hash-membership mask of the support (anchor excluded) for a batch of
    fresh filter seeds.  Returns (other_ids, other_weights, mask_matrix)."""
    from .oracle import _filter_mask_matrix  # internal on purpose

    d = session.dist
    sup = d.support.astype(np.int64)
    others = sup[sup != x]
    w_others = d.mass_of(others)
    if others.size == 0:
        return others, w_others, np.zeros((seeds.size, 0), dtype=bool)
    return others, w_others, _filter_mask_matrix(seeds, others, alpha)


def est_expected_beta(session: OracleSession, profile: Profile, x: int, alpha: float) -> float:
    """Mean filtered density over fresh filter draws.

    For each of M rows: draw a fresh alpha-filter, then sample from the
    distribution conditioned on (filter ∪ {x}) until x comes up (indicator 0)
    or the gross pairwise test accepts the sample (indicator 1), capped.
    Output is the fraction of 1s; with the reference constants it lands
    within 1/200 of E[beta] with probability 2/3.

    When every support element outside the anchor carries the same mass, the
    members of a filter draw are exchangeable: only their count influences
    the row, so the filter reduces to one binomial draw per row.  The general
    path materializes per-row membership masks instead.  Both paths count one
    conditional sample per inner draw and one full pairwise test per
    non-anchor sample.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must be in (0, 1]")
    d = session.dist
    wx = d.mass(x)
    m_rows = profile.beta_samples
    cap = profile.beta_inner_cap
    ell = lightweight_ell(profile.gross_target_eta, profile.ell_multiplier)
    rng = session.rng
    sup = d.support.astype(np.int64)
    others = sup[sup != x]
    w_others = d.mass_of(others)

    if others.size == 0:
        # Nothing can ever join the filter: the first draw is always x.
        if wx <= 0.0:
            raise ZeroMassError("filter ∪ {x} has zero mass and the anchor is massless")
        session.count(m_rows)
        return 0.0

    if np.all(w_others == w_others[0]):
        return _est_beta_rows_equal_mass(
            session, wx, float(w_others[0]), others.size, alpha, m_rows, cap, ell
        )
    return _est_beta_rows_general(session, x, wx, others, w_others, alpha, m_rows, cap, ell)


def _est_beta_rows_equal_mass(session: OracleSession, wx: float, w: float, n_others: int,
                              alpha: float, m_rows: int, cap: int, ell: int) -> float:
    rng = session.rng
    m_cnt = rng.binomial(n_others, alpha, size=m_rows)
    totals = wx + m_cnt * w
    if wx <= 0.0 and np.any(totals <= 0.0):
        raise ZeroMassError("filter ∪ {x} has zero mass and the anchor is massless")
    p_test = w / (wx + w)
    b = np.zeros(m_rows, dtype=bool)
    active = np.flatnonzero(totals > 0.0)
    for _ in range(cap):
        k = active.size
        if k == 0:
            break
        session.count(k)
        u = rng.random(k) * totals[active]
        hit_x = u < wx
        rows = active[~hit_x]
        if rows.size:
            session.count(ell * rows.size)
            hits = rng.binomial(ell, p_test, size=rows.size)
            acc = 44 * hits < 23 * ell
            b[rows[acc]] = True
            active = rows[~acc]
        else:
            active = rows
    return float(b.sum()) / m_rows


def _est_beta_rows_general(session: OracleSession, x: int, wx: float, others: np.ndarray,
                           w_others: np.ndarray, alpha: float, m_rows: int, cap: int,
                           ell: int) -> float:
    rng = session.rng
    ones = 0
    block = max(64, min(m_rows, (1 << 21) // max(1, others.size)))
    done_rows = 0
    while done_rows < m_rows:
        nb = min(block, m_rows - done_rows)
        done_rows += nb
        seeds = rng.integers(0, 2**63 - 1, size=nb)
        _, _, mask = _filter_members_excl_anchor(session, x, seeds, alpha)
        wmat = np.where(mask, w_others, 0.0)
        cum = np.cumsum(wmat, axis=1)
        totals = wx + cum[:, -1]
        if wx <= 0.0 and np.any(totals <= 0.0):
            raise ZeroMassError("filter ∪ {x} has zero mass and the anchor is massless")
        b = np.zeros(nb, dtype=bool)
        active = np.flatnonzero(totals > 0.0)
        for _ in range(cap):
            k = active.size
            if k == 0:
                break
            session.count(k)
            u = rng.random(k) * totals[active]
            hit_x = u < wx
            rows = active[~hit_x]
            if rows.size:
                v = u[~hit_x] - wx
                pos = (cum[rows] < v[:, None]).sum(axis=1)
                session.count(ell * rows.size)
                wy = w_others[pos]
                pvec = wy / (wx + wy)
                hits = rng.binomial(ell, pvec)
                acc = 44 * hits < 23 * ell
                b[rows[acc]] = True
                active = rows[~acc]
            else:
                active = rows
        ones += int(b.sum())
    return ones / m_rows


def est_single_beta(session: OracleSession, profile: Profile, x: int, alpha: float,
                    delta: float, filter_cset: FilterUnion, vx: VxObject) -> float:
    """Filtered density of one realized (filter, target-set) pair.

    Same first-exit sampling as est_expected_beta, but the filter is fixed
    and membership goes through the lazy set object (at most one membership
    query per sample; cache hits are free).  Within +-delta of the realized
    density with probability 2/3.
    """
    if not (0.0 < delta < 0.25):
        raise ValueError("delta must be in (0, 1/4)")
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must be in (0, 1]")
    m_rows = math.ceil(8.0 / delta**2)
    cap = math.ceil(3.0 * math.log(6.0 / delta) / delta)
    hits = 0
    active = m_rows
    for _ in range(cap):
        if active == 0:
            break
        ys = session.sample_conditional_many(filter_cset, active)
        not_x = ys != x
        survivors = ys[not_x]
        if survivors.size:
            member = vx_query_batch(session, vx, survivors)
            hits += int(member.sum())
            active = int((~member).sum())
        else:
            active = 0
    return hits / m_rows


def h_of(beta: float, eps: float) -> float:
    """Truncated odds min{beta/(1-beta), T} with T = 8 ln(1/eps) + 100."""
    cap = 8.0 * math.log(1.0 / eps) + 100.0
    if beta >= 1.0:
        return cap
    if beta <= 0.0:
        return 0.0
    return min(beta / (1.0 - beta), cap)


def est_expected_h_beta(session: OracleSession, profile: Profile, x: int, alpha: float) -> float:
    """Mean truncated odds of the filtered density over fresh (filter,
    target-set) pairs; with probability 2/3 within (1 ± eps/2) of
    alpha * s_x / mu(x) whenever alpha sits within [gamma_x, 50 gamma_x].
    """
    m1 = profile.hbeta_m1
    m2 = profile.hbeta_m2
    delta = profile.hbeta_delta
    q = profile.hbeta_q
    eps = profile.eps
    total = 0.0
    for _ in range(m1):
        cset = session.fresh_filter(alpha, x)
        obj = initialize_new_vx(profile, x, q)
        bhat = median_of(
            m2, lambda: est_single_beta(session, profile, x, alpha, delta, cset, obj)
        )
        if obj.over_budget:
            session.events["vx_over_budget"] = session.events.get("vx_over_budget", 0) + 1
        total += h_of(bhat, eps)
    return total / m1
