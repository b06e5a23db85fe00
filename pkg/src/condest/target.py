"""Pairwise comparison tests: accept elements no heavier than the anchor,
reject elements at least 1.2x heavier, with error at most eta per call.

The canonical test is the lightweight one (fixed 23/44 acceptance threshold,
ell = ceil(968 ln(1/eta)) pair draws); the explicit test with its randomized
threshold is provided for completeness but needs impractical constants and is
never on the default path.  The "gross" variant is the canonical test run at
the looser of (eta, configured gross eta); with the lightweight substitution
the two coincide under both named profiles, so the gross-vs-canonical
acceptance gap is exactly zero there.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.stats import binom

from .dist import Distribution
from .oracle import OracleSession
from .profiles import KAPPA_DEFAULT, Profile

__all__ = [
    "ACCEPT",
    "REJECT",
    "lightweight_ell",
    "target_test_lightweight",
    "target_test_explicit",
    "target_test",
    "target_test_gross",
    "target_test_batch",
    "exact_accept_probability",
]

ACCEPT = True
REJECT = False

# Acceptance threshold of the lightweight test: accept iff Y < (23/44) ell.
_THRESH = Fraction(23, 44)


def lightweight_ell(eta: float, ell_multiplier: float = 968.0) -> int:
    return math.ceil(ell_multiplier * math.log(1.0 / eta))


def _lightweight_accepts(hits: int, ell: int) -> bool:
    # Y < (23/44) ell, exactly, in integer arithmetic.
    return 44 * hits < 23 * ell


def target_test_lightweight(session: OracleSession, x: int, y: int, eta: float,
                            ell_multiplier: float = 968.0) -> bool:
    """Fixed-threshold pairwise test; rejects y == x outright (zero samples)."""
    if y == x:
        return REJECT
    ell = lightweight_ell(eta, ell_multiplier)
    hits = session.count_pair_hits(x, y, ell)
    return _lightweight_accepts(hits, ell)


def target_test_explicit(session: OracleSession, x: int, y: int, eta: float,
                         kappa: float = KAPPA_DEFAULT) -> bool:
    """Randomized-threshold pairwise test: draw t ~ U[1/2 + kappa, 6/11 - kappa]
    and accept iff the y-count among ell = ceil(ln(1/eta) / 2 kappa^2) pair
    draws stays below t*ell."""
    if y == x:
        return REJECT
    if not (0.0 < kappa < 1.0 / 44.0):
        raise ValueError("kappa must be in (0, 1/44) so the draw interval is non-empty")
    ell = math.ceil(math.log(1.0 / eta) / (2.0 * kappa**2))
    t = session.rng.uniform(0.5 + kappa, 6.0 / 11.0 - kappa)
    hits = session.count_pair_hits(x, y, ell)
    return hits < t * ell


def target_test(session: OracleSession, x: int, y: int, profile: Profile) -> bool:
    """Canonical pairwise test at the profile's target error."""
    return target_test_lightweight(session, x, y, profile.target_eta, profile.ell_multiplier)


def target_test_gross(session: OracleSession, x: int, y: int, profile: Profile) -> bool:
    """Cheap variant used inside the E[beta] estimator; canonical test at
    min(target eta, configured gross eta)."""
    return target_test_lightweight(session, x, y, profile.gross_target_eta, profile.ell_multiplier)


def target_test_batch(session: OracleSession, x: int, ys: np.ndarray, eta: float,
                      ell_multiplier: float = 968.0) -> np.ndarray:
    """Independent canonical tests against each y in ys (vector of bools).

    Each test draws its own ell pair samples; ys entries equal to x reject
    with zero samples.
    """
    ys = np.asarray(ys, dtype=np.int64)
    out = np.zeros(ys.shape, dtype=bool)
    run = ys != x
    if run.any():
        ell = lightweight_ell(eta, ell_multiplier)
        hits = session.count_pair_hits_many(x, ys[run], ell)
        out[run] = 44 * hits < 23 * ell
    return out


def _lightweight_accept_max(ell: int) -> int:
    # Largest integer Y with Y < (23/44) ell.
    return (23 * ell - 1) // 44


def exact_accept_probability(d: Distribution, x: int, y: int, eta: float,
                             test_kind: str = "lightweight", *,
                             ell_multiplier: float = 968.0,
                             kappa: float = KAPPA_DEFAULT) -> float:
    """Exact acceptance probability of the pairwise test (test-kit oracle).

    Lightweight kind: the binomial tail Pr[Bin(ell, p) < (23/44) ell] with
    p = mu(y)/(mu(x)+mu(y)), evaluated through the regularized incomplete
    beta function.  Explicit kind: the threshold randomization is integrated
    out exactly via Pr[t > k/ell] summed against the binomial pmf.
    """
    if y == x:
        return 0.0
    mx, my = d.mass(x), d.mass(y)
    tot = mx + my
    if tot <= 0.0:
        raise ValueError("pair has zero mass; acceptance probability undefined")
    p = my / tot
    if test_kind == "lightweight":
        ell = lightweight_ell(eta, ell_multiplier)
        return float(binom.cdf(_lightweight_accept_max(ell), ell, p))
    if test_kind == "explicit":
        ell = math.ceil(math.log(1.0 / eta) / (2.0 * kappa**2))
        if ell > 5_000_000:
            raise ValueError(f"explicit-kind exact oracle infeasible at ell={ell}")
        lo, hi = 0.5 + kappa, 6.0 / 11.0 - kappa
        ks = np.arange(ell + 1)
        # accept iff k < t*ell, i.e. t > k/ell; integrate over uniform t.
        pr_t = np.clip((hi - ks / ell) / (hi - lo), 0.0, 1.0)
        return float(np.sum(binom.pmf(ks, ell, p) * pr_t))
    raise ValueError(f"unknown test kind {test_kind!r}")
