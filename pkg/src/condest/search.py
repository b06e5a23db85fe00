"""Noisy search for the filtering parameter alpha.

Three layers: a three-valued comparator built from two mean-filtered-density
estimates, a backtracking random-walk binary search on the dyadic range tree
that tolerates a 1/100 per-call lie rate, and the interleaved driver that
splits the exponent range into six stride-6 residue classes so consecutive
candidates are far enough apart for the comparator's guarantees to apply.

Verdict convention of the search: LOW at indices before the goal range, HIGH
after it (non-decreasing along the index axis); the walk descends right when
the middle answers LOW.  The driver searches exponents i (alpha = 2^-i), so
"alpha too big" at an exponent translates to index-verdict LOW and "alpha too
small" to HIGH.

Every walk step makes exactly three comparator calls (leaf steps query the
leaf three times and take the majority), and the driver extends each residue
class to its padded power-of-two size with real comparator calls, so the
instrumented comparator-call count is a deterministic function of the domain
size and the residue class at which the driver returns.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .estimators import est_expected_beta
from .oracle import OracleSession
from .profiles import Profile

__all__ = [
    "Verdict",
    "uncertain_comparator",
    "strict_binary_search",
    "find_good_alpha",
    "find_good_alpha_report",
    "FindAlphaStats",
    "interleave_ranges",
    "walk_steps",
    "comparator_calls_formula",
]


class Verdict(enum.IntEnum):
    LOW = 0
    GOOD = 1
    HIGH = 2


# Decision thresholds on the two estimates (structural constants).
_LOW_CUT = 0.905
_HIGH_CUT = 0.915


def uncertain_comparator(session: OracleSession, profile: Profile, x: int,
                         alpha: float) -> Verdict:
    """Compare alpha against the unknown goal magnitude.

    Medians of est_expected_beta at alpha and at min(1, 2*alpha); LOW (alpha
    too small) when the doubled estimate stays under 0.905, HIGH (alpha too
    big) when the base estimate exceeds 0.915, GOOD otherwise.
    """
    m = profile.comparator_medians
    lo_vals = []
    hi_vals = []
    for _ in range(m):
        lo_vals.append(est_expected_beta(session, profile, x, alpha))
        hi_vals.append(est_expected_beta(session, profile, x, min(1.0, 2.0 * alpha)))
    lo_hat = sorted(lo_vals)[m // 2]
    hi_hat = sorted(hi_vals)[m // 2]
    if hi_hat < _LOW_CUT:
        return Verdict.LOW
    if lo_hat > _HIGH_CUT:
        return Verdict.HIGH
    return Verdict.GOOD


def walk_steps(n_padded: int) -> int:
    """Number of walk steps for a padded range of size n (a power of two)."""
    return 20 * int(round(math.log2(n_padded))) if n_padded > 1 else 0


def _pad_to_pow2(n: int) -> int:
    return 1 << math.ceil(math.log2(n)) if n > 1 else 1


def strict_binary_search(n: int, comparator, *, trace=None) -> int:
    """Random-walk binary search driven by an uncertain comparator.

    The walk runs for exactly 20*log2(n') steps on the dyadic range tree over
    {1..n'} (n' = n padded to a power of two; queries beyond n answer HIGH
    deterministically) and returns the left endpoint of the final range.
    With an appeasable 99/100-conviction comparator the result lies in the
    goal range with probability at least 2/3.

    Per step: on an inner node the three probes L, M, R must form a
    non-decreasing bracket of GOOD to descend (right child when the middle is
    LOW), otherwise the walk backtracks (the root backtracks to itself); on a
    leaf, three probes of the leaf decide by majority whether to stay.  The
    three-probe leaf only tightens the per-step error rate the walk analysis
    needs, and makes every step cost exactly three comparator calls.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    n2 = _pad_to_pow2(n)

    def ask(i: int) -> Verdict:
        if i > n:
            return Verdict.HIGH
        return comparator(i)

    lo, hi = 1, n2
    stack: list[tuple[int, int]] = []
    for _ in range(walk_steps(n2)):
        prev = (lo, hi)
        if lo == hi:
            votes = (ask(lo), ask(lo), ask(lo))
            if sum(v == Verdict.GOOD for v in votes) >= 2:
                pass  # stay on the leaf
            else:
                lo, hi = stack.pop()
            if trace is not None:
                trace.append((prev, votes, (lo, hi)))
            continue
        mid = (lo + hi - 1) // 2
        ans_l, ans_m, ans_r = ask(lo), ask(mid), ask(hi)
        consistent = (
            ans_l <= ans_m <= ans_r
            and ans_l <= Verdict.GOOD <= ans_r
        )
        if consistent:
            stack.append((lo, hi))
            if ans_m == Verdict.LOW:
                lo = mid + 1  # goal is right of mid
            else:
                hi = mid      # mid is GOOD or HIGH: goal reaches into the left half
        elif (lo, hi) == (1, n2):
            pass  # stay at root
        else:
            lo, hi = stack.pop()
        if trace is not None:
            trace.append((prev, (ans_l, ans_m, ans_r), (lo, hi)))
    return lo


@dataclass(frozen=True)
class FindAlphaStats:
    """Outcome record of one alpha search."""

    residue: int            # residue class at which the search returned; 6 = fallback
    comparator_calls: int   # total uncertain-comparator invocations
    exponent: int           # returned alpha = 2**-exponent


def interleave_ranges(n_domain: int) -> list[int]:
    """Sizes of the six stride-6 residue-class index ranges over {0..N'}."""
    np_exp = 1 + math.ceil(math.log2(n_domain))
    return [(np_exp - r) // 6 + 1 for r in range(6)]


def comparator_calls_formula(n_domain: int, residue: int, profile: Profile) -> int:
    """Deterministic comparator-call count of a search returning at the given
    residue class (residue 6 means the fallback was reached).

    Per residue r: search_repeats walks of 3 calls per step over the padded
    range, plus one final goodness check, all amplified search_amp-fold.
    """
    sizes = interleave_ranges(n_domain)
    total_oracle_calls = 0
    for r in range(min(residue, 5) + 1):
        steps = walk_steps(_pad_to_pow2(sizes[r]))
        total_oracle_calls += profile.search_repeats * 3 * steps + 1
    return total_oracle_calls * profile.search_amp


# Comparator verdicts are about alpha; the walk's are about the exponent
# index (alpha = 2^-i), which reverses the axis.
_ALPHA_TO_INDEX = {Verdict.LOW: Verdict.HIGH, Verdict.GOOD: Verdict.GOOD,
                   Verdict.HIGH: Verdict.LOW}


def find_good_alpha_report(session: OracleSession, profile: Profile, x: int):
    """Search for alpha = 2^-i with gamma_x <= alpha <= 41*gamma_x (w.p. 2/3
    under the reference constants, given mu(x) <= s_x/4).

    Returns (alpha, FindAlphaStats).  The exponent range {0..N'} is split
    into six stride-6 residue classes, each searched over its padded
    power-of-two size by the backtracking walk with the comparator amplified
    search_amp-fold; the first index that both wins its search and passes a
    final goodness check is returned, with 2^-N' as the fallback.  Padded
    indices map to genuinely smaller alphas and go through the real
    comparator, so the call count stays on the structural formula.
    """
    n_domain = session.dist.n
    np_exp = 1 + math.ceil(math.log2(n_domain))
    m1 = profile.search_amp
    m2 = profile.search_repeats
    calls = 0

    def amplified(r: int):
        def oracle(ip: int) -> Verdict:
            nonlocal calls
            exponent = 6 * (ip - 1) + r
            alpha = max(2.0**-exponent, 1e-300)
            votes = []
            for _ in range(m1):
                votes.append(uncertain_comparator(session, profile, x, alpha))
            calls += m1
            about_alpha = Verdict(sorted(int(v) for v in votes)[m1 // 2])
            return _ALPHA_TO_INDEX[about_alpha]

        return oracle

    sizes = interleave_ranges(n_domain)
    for r in range(6):
        oracle = amplified(r)
        padded = _pad_to_pow2(sizes[r])
        results = sorted(strict_binary_search(padded, oracle) for _ in range(m2))
        ip_r = results[m2 // 2]
        if oracle(ip_r) == Verdict.GOOD:
            exponent = 6 * (ip_r - 1) + r
            return 2.0**-exponent, FindAlphaStats(residue=r, comparator_calls=calls,
                                                  exponent=exponent)
    return 2.0**-np_exp, FindAlphaStats(residue=6, comparator_calls=calls, exponent=np_exp)


def find_good_alpha(session: OracleSession, profile: Profile, x: int) -> float:
    alpha, _ = find_good_alpha_report(session, profile, x)
    return alpha
