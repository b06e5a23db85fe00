"""Top-level mass estimation: the joint (mu(x), s_x) preamble and the full
saturation-aware single-element estimator.

The estimator first tries to read mu(x) directly off unconditional samples
(together with the scale mass s_x); only when the direct read saturates does
it search for a filtering parameter and take the filtered-density route,
returning alpha * s_hat / b_hat.  Phase labels split the sample accounting
into preamble / find-alpha / h-beta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimators import (
    TOO_LOW,
    is_too_low,
    median_estimate,
    est_expected_h_beta,
    saturation_aware_est,
)
from .oracle import OracleSession
from .profiles import Profile, make_profile
from .search import find_good_alpha_report

__all__ = ["EstimationReport", "preamble", "estimate_single", "estimate_single_report", "profile"]


@dataclass
class EstimationReport:
    """Outcome of one full estimation, with branch provenance.

    estimate is alpha * s_hat / b_hat exactly when the filtered-density
    branch ran (branch == "beta-path"); alpha and b_hat are absent otherwise.
    """

    estimate: object
    s_hat: object = None
    alpha: float | None = None
    b_hat: float | None = None
    branch: str = ""
    find_alpha_residues: tuple = ()
    find_alpha_comparator_calls: tuple = ()
    counters: dict = field(default_factory=dict)


def profile(name: str, c: float = 0.05, eps: float = 0.2, **overrides) -> Profile:
    """Resolve a named parameter bundle (thin alias of profiles.make_profile)."""
    return make_profile(name, c=c, eps=eps, **overrides)


def _w_oracle(session: OracleSession, prof: Profile, x: int):
    """Indicator with mean mu(x) + sum_y mu(y) f_x(y): draw y ~ mu, succeed on
    y == x or canonical-test acceptance.  Returns (bits, costs) chunks."""
    ell = prof.ell
    eta = prof.target_eta

    def oracle(k: int):
        ys = session.dist.sample_ids(session.rng, k)
        bits = ys == x
        costs = np.ones(k, dtype=np.int64)
        rest = ~bits
        n_rest = int(rest.sum())
        if n_rest:
            wy = session.dist.mass_of(ys[rest])
            wx = session.dist.mass(x)
            tot = wx + wy
            # y was just drawn from mu, so mu(y) > 0 and the pair has mass.
            p = wy / tot
            hits = session.rng.binomial(ell, p)
            bits[rest] = 44 * hits < 23 * ell
            costs[rest] += ell
        return bits, costs

    return oracle


def _s_oracle(session: OracleSession, prof: Profile, x: int):
    """Indicator with mean sum_{y != x} mu(y) f_x(y)."""
    ell = prof.ell

    def oracle(k: int):
        ys = session.dist.sample_ids(session.rng, k)
        bits = np.zeros(k, dtype=bool)
        costs = np.ones(k, dtype=np.int64)
        rest = ys != x
        n_rest = int(rest.sum())
        if n_rest:
            wy = session.dist.mass_of(ys[rest])
            wx = session.dist.mass(x)
            p = wy / (wx + wy)
            hits = session.rng.binomial(ell, p)
            bits[rest] = 44 * hits < 23 * ell
            costs[rest] += ell
        return bits, costs

    return oracle


def _mu_oracle(session: OracleSession, x: int):
    """Indicator with mean mu(x): draw y ~ mu, succeed on y == x."""

    def oracle(k: int):
        ys = session.dist.sample_ids(session.rng, k)
        return ys == x, None

    return oracle


def _estimate_w(session: OracleSession, prof: Profile, x: int):
    a = prof.c - prof.target_eta
    return saturation_aware_est(
        a, _w_oracle(session, prof, x), 1.0 / 3.0,
        coef=prof.sat_coef, charge=session.count, chunk=prof.chunk,
    )


def _estimate_p(session: OracleSession, prof: Profile, x: int, w_hat: float):
    return saturation_aware_est(
        w_hat / 9.0, _mu_oracle(session, x), prof.eps,
        coef=prof.sat_coef, charge=session.count, chunk=prof.chunk,
    )


def _estimate_s(session: OracleSession, prof: Profile, x: int, w_hat: float):
    return saturation_aware_est(
        w_hat / 9.0, _s_oracle(session, prof, x), prof.eps / 6.0,
        coef=prof.sat_coef, charge=session.count, chunk=prof.chunk,
    )


def preamble(session: OracleSession, prof: Profile, x: int):
    """Joint saturation-aware estimator of (mu(x), s_x).

    Medians of a rough weight estimate gate the two refined estimates; a
    saturated weight means both outputs saturate.  When mu(x) = 0 the weight
    indicator never fires (a drawn y is never x, and the pair test conditioned
    on {x, y} rejects almost surely), so the output is (TOO_LOW, TOO_LOW)
    without ever conditioning on a zero-mass set.
    """
    m = prof.preamble_medians
    w_hat = median_estimate([_estimate_w(session, prof, x) for _ in range(m)])
    if is_too_low(w_hat):
        return TOO_LOW, TOO_LOW
    s_list = []
    p_list = []
    for _ in range(m):
        s_list.append(_estimate_s(session, prof, x, w_hat))
        p_list.append(_estimate_p(session, prof, x, w_hat))
    return median_estimate(p_list), median_estimate(s_list)


def estimate_single_report(session: OracleSession, prof: Profile, x: int) -> EstimationReport:
    """Full estimation of mu(x) with branch provenance and phase accounting.

    Median-of-M preamble reads; a non-saturated direct read is returned as
    is.  Otherwise (saturated mu, readable s) the filtered-density branch
    runs: median-of-M alpha searches, then median-of-M truncated-odds
    estimates, and the output is alpha * s_hat / b_hat.  Both saturated means
    the element is below the working threshold: TOO_LOW.

    The direct read and the scale read are taken in separate passes (the
    scale pass only runs when the branch needs it); the two are independent
    given the weight gate, so the split changes no distribution, only cost.
    """
    m = prof.top_medians
    start = dict(session.counters)

    with session.phase("preamble"):
        p_meds = []
        for _ in range(m):
            w_hat = median_estimate(
                [_estimate_w(session, prof, x) for _ in range(prof.preamble_medians)]
            )
            if is_too_low(w_hat):
                p_meds.append(TOO_LOW)
                continue
            p_meds.append(median_estimate(
                [_estimate_p(session, prof, x, w_hat) for _ in range(prof.preamble_medians)]
            ))
        p_hat = median_estimate(p_meds)

        if not is_too_low(p_hat):
            return EstimationReport(estimate=p_hat, branch="preamble-direct",
                                    counters=_delta(session.counters, start))

        s_meds = []
        for _ in range(m):
            w_hat = median_estimate(
                [_estimate_w(session, prof, x) for _ in range(prof.preamble_medians)]
            )
            if is_too_low(w_hat):
                s_meds.append(TOO_LOW)
                continue
            s_meds.append(median_estimate(
                [_estimate_s(session, prof, x, w_hat) for _ in range(prof.preamble_medians)]
            ))
        s_hat = median_estimate(s_meds)

    if is_too_low(s_hat):
        return EstimationReport(estimate=TOO_LOW, s_hat=TOO_LOW, branch="too-low",
                                counters=_delta(session.counters, start))

    with session.phase("find-alpha"):
        alphas = []
        residues = []
        calls = []
        for _ in range(m):
            a, stats = find_good_alpha_report(session, prof, x)
            alphas.append(a)
            residues.append(stats.residue)
            calls.append(stats.comparator_calls)
        alpha = sorted(alphas)[m // 2]

    with session.phase("h-beta"):
        b_list = [est_expected_h_beta(session, prof, x, alpha) for _ in range(m)]
        b_hat = sorted(b_list)[m // 2]

    if b_hat <= 0.0:
        # Every truncated-odds read came back zero: the filtered set never
        # fired, so the element is effectively below threshold.
        return EstimationReport(estimate=TOO_LOW, s_hat=s_hat, alpha=alpha, b_hat=b_hat,
                                branch="degenerate-b", counters=_delta(session.counters, start),
                                find_alpha_residues=tuple(residues),
                                find_alpha_comparator_calls=tuple(calls))

    est = alpha * s_hat / b_hat
    return EstimationReport(estimate=est, s_hat=s_hat, alpha=alpha, b_hat=b_hat,
                            branch="beta-path", counters=_delta(session.counters, start),
                            find_alpha_residues=tuple(residues),
                            find_alpha_comparator_calls=tuple(calls))


def estimate_single(session: OracleSession, prof: Profile, x: int):
    """Estimate mu(x): a positive float within (1 +- eps) of the truth for
    elements above the cumulative threshold (w.p. 2/3 under the reference
    constants), or TOO_LOW for negligible ones."""
    return estimate_single_report(session, prof, x).estimate


def _delta(now: dict, before: dict) -> dict:
    return {k: v - before.get(k, 0) for k, v in now.items() if v - before.get(k, 0)}
