"""Oracle-reduction layers and the three applications: histogram learning,
total-variation estimation, and equivalence testing.

The reduction layers simulate "peek" (query a mass estimate) and "explicit
sample" (sample plus attached mass estimate) oracles on top of the core
estimator, with per-element caching for consistency and median amplification
for per-element reliability.  TOO_LOW maps to 0, which the oracle contracts
allow only for elements below the cumulative threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import Distribution
from .estimators import is_too_low, median_estimate
from .oracle import BudgetExceeded, OracleSession, SampleBudget
from .pipeline import estimate_single
from .profiles import Profile

__all__ = [
    "PeekLayer",
    "BucketHistogram",
    "learn_histogram_buckets",
    "solve_bucket_constraints",
    "learn_histogram",
    "estimate_bounded_ratio",
    "estimate_dtv",
    "equivalence_test",
    "label_invariant_test",
    "explicit_sample_amplification",
]


def explicit_sample_amplification(r: float) -> int:
    """Median count making the per-element error of a simulated explicit
    sampling oracle at most r."""
    if not (0.0 < r < 1.0):
        raise ValueError("error rate must be in (0, 1)")
    return math.ceil(30.0 * math.log(1.0 / r))


class PeekLayer:
    """Simulated (c, eps)-peek / explicit-sampling oracle over one session.

    Every element is estimated at most once (median of `amp` core estimator
    runs) and the answer is cached, so repeated queries are consistent by
    construction.  TOO_LOW is reported as 0.
    """

    def __init__(self, session: OracleSession, prof: Profile, c: float, eps: float,
                 amp: int | None = None):
        self.session = session
        self.profile = prof.derive(c=c, eps=eps)
        if amp is None:
            amp = prof.peek_amp if prof.peek_amp is not None else explicit_sample_amplification(c)
        self.amp = max(1, int(amp))
        self._cache: dict[int, float] = {}

    def peek(self, x: int) -> float:
        if x in self._cache:
            return self._cache[x]
        est = median_estimate(
            [estimate_single(self.session, self.profile, x) for _ in range(self.amp)]
        )
        val = 0.0 if is_too_low(est) else float(est)
        self._cache[x] = val
        return val

    def explicit_sample(self) -> tuple[int, float]:
        x = self.session.sample()
        return x, self.peek(x)


@dataclass
class BucketHistogram:
    """Empirical distribution over geometric mass buckets 1..t plus overflow."""

    t: int
    masses: np.ndarray        # length t+1; index i-1 = bucket i, index t = overflow
    eps_hat: float

    @property
    def overflow(self) -> float:
        return float(self.masses[self.t])

    def bucket(self, i: int) -> float:
        return float(self.masses[i - 1])


def _bucket_of(p_hat: float, eps_hat: float, t: int) -> int:
    """Bucket index of an estimated mass; 0 promotes to 1, beyond-t to t+1
    (overflow), zero estimates straight to overflow."""
    if p_hat <= 0.0:
        return t + 1
    f = math.ceil(-math.log(p_hat) / (2.0 * eps_hat))
    if f <= 0:
        f = 1
    if f > t:
        return t + 1
    return f


def bucket_count(n: int, eps_hat: float) -> int:
    return math.ceil(math.log(n / eps_hat**2) / (2.0 * eps_hat)) + 2


def bucket_transform(i, eps: float, eps2: float):
    """Coarsen a bucket index from resolution eps to eps2 >= 2*eps
    (infinity maps to itself)."""
    if eps2 < 2.0 * eps:
        raise ValueError("target resolution must be at least twice the source")
    if i == math.inf:
        return math.inf
    return math.ceil(eps / eps2 * i)


def is_bucket_function(d, f, eps: float, t: int) -> bool:
    """Check the bucket-function contract against exact masses: elements with
    mass above e^{-eps(t-2)} and cumulative mass at least eps must land in a
    bucket i with mass in e^{-eps(i +- 2)}; everything else may also overflow.
    """
    from .dist import cdf_mu

    for x in range(1, d.n + 1):
        i = f(x)
        m = d.mass(x)
        in_band = (
            i != math.inf
            and math.exp(-eps * (i + 2)) - 1e-15 <= m <= math.exp(-eps * (i - 2)) + 1e-15
        )
        must_band = m > math.exp(-eps * (t - 2)) and cdf_mu(d, x) >= eps
        if must_band and not in_band:
            return False
        if not must_band and not (i == math.inf or in_band):
            return False
    return True


def learn_histogram_buckets(layer: PeekLayer, eps_hat: float) -> BucketHistogram:
    """Empirical bucket distribution from explicit samples binned by their
    estimated masses (with the usual +-2-bucket slack from estimation error).
    """
    if not (0.0 < eps_hat < 1.0 / 27.0):
        raise ValueError("bucket resolution must satisfy 0 < eps_hat < 1/27")
    n = layer.session.dist.n
    t = bucket_count(n, eps_hat)
    q = math.ceil((t + 1) / eps_hat**2)
    counts = np.zeros(t + 1, dtype=np.int64)
    for _ in range(q):
        _, p_hat = layer.explicit_sample()
        counts[_bucket_of(p_hat, eps_hat, t) - 1] += 1
    return BucketHistogram(t=t, masses=counts / q, eps_hat=eps_hat)


def solve_bucket_constraints(nu: BucketHistogram, n: int, eps_hat: float):
    """Feasible (counts, masses) assignment for the bucket histogram.

    Greedy relaxed solver: masses sit at the center of the allowed band,
    counts at the rounded quotient, then the two sum constraints are repaired
    by decrementing the buckets whose rounding overshot the most.  All five
    constraints are re-verified before returning (residual bound 24*eps_hat,
    twice the exhaustive solver's, which suffices for histogram learning).
    """
    t = nu.t
    p = np.exp(-2.0 * eps_hat * np.arange(1, t + 1))
    counts = np.rint(nu.masses[:t] / p).astype(np.int64)
    counts = np.maximum(counts, 0)

    def overshoot():
        return max(0.0, float(counts @ p) - 1.0), max(0, int(counts.sum()) - n)

    mass_over, count_over = overshoot()
    guard = 0
    while (mass_over > 0.0 or count_over > 0) and guard < 10 * (t + n):
        guard += 1
        # Reduce whichever bucket currently overshoots its target the most.
        resid = counts * p - nu.masses[:t]
        resid[counts == 0] = -np.inf
        j = int(np.argmax(resid))
        if counts[j] <= 0:
            break
        counts[j] -= 1
        mass_over, count_over = overshoot()

    _verify_bucket_solution(counts, p, nu, n, eps_hat)
    return counts, p


def _verify_bucket_solution(counts, p, nu: BucketHistogram, n: int, eps_hat: float) -> None:
    t = nu.t
    if counts.size != t or p.size != t:
        raise ValueError("solution shape mismatch")
    if int(counts.sum()) > n:
        raise ValueError("bucket solution infeasible: counts exceed the domain size")
    if float(counts @ p) > 1.0 + 1e-12:
        raise ValueError("bucket solution infeasible: total mass exceeds 1")
    if np.any(counts < 0):
        raise ValueError("bucket solution infeasible: negative count")
    lo = np.exp(-2.0 * eps_hat * (np.arange(1, t + 1) + 2))
    hi = np.exp(-2.0 * eps_hat * (np.arange(1, t + 1) - 2))
    if np.any(p < lo - 1e-15) or np.any(p > hi + 1e-15):
        raise ValueError("bucket solution infeasible: mass outside its band")
    resid = float(np.abs(counts * p - nu.masses[:t]).sum())
    if resid > 24.0 * eps_hat + 1e-12:
        raise ValueError(f"bucket solution infeasible: residual {resid} > 24*eps_hat")


def learn_histogram(session: OracleSession, eps: float, prof: Profile) -> Distribution:
    """Learn a distribution whose histogram is close to the input's.

    Buckets learned at resolution eps_hat = eps / hist_eps_divisor through an
    explicit-sampling layer at (eps_hat, eps_hat), then converted back to a
    distribution with exactly counts[i] atoms of mass p[i]/s."""
    eps_hat = eps / prof.hist_eps_divisor
    layer = PeekLayer(session, prof, c=eps_hat, eps=eps_hat)
    nu = learn_histogram_buckets(layer, eps_hat)
    counts, p = solve_bucket_constraints(nu, session.dist.n, eps_hat)
    s = float(counts @ p)
    if s <= 0.0:
        raise RuntimeError("bucket solution carries no mass; nothing to normalize")
    w = np.zeros(session.dist.n)
    pos = 0
    for i in range(nu.t):
        c_i = int(counts[i])
        if c_i:
            w[pos:pos + c_i] = p[i] / s
            pos += c_i
    return Distribution(w)


def estimate_bounded_ratio(session: OracleSession, eps: float, f_hat, g_hat) -> float:
    """E_mu[max{0, 1 - f(x)/g(x)}] within +-4*eps (w.p. 5/6) from
    (1 +- eps)-approximation oracles of f and g.

    Ratio conventions for zero denominators: positive/0 clips to 1 (the
    max{} term contributes nothing) and 0/0 counts as 1 (the element is
    negligible on both sides)."""
    m = math.ceil(6.0 / eps**2)
    xs = session.sample_many(m)
    total = 0.0
    for x in xs:
        x = int(x)
        p = f_hat(x)
        q = g_hat(x)
        if q <= 0.0:
            ratio = 1.0  # p/0 = +inf clips to 1; 0/0 counts as 1
        else:
            ratio = min(1.0, p / q)
        total += ratio
    return 1.0 - total / m


def estimate_dtv(session_a: OracleSession, session_b: OracleSession, eps: float,
                 prof: Profile) -> float:
    """Total-variation distance within +-eps (w.p. 2/3) through two peek
    layers at (eps/6, eps/6).

    Each one-sided term puts the *other* distribution's truncated mass in the
    numerator: the x ~ mu term averages max{0, 1 - f_tau(x)/f_mu(x)}, so
    disjoint supports push both terms to 1.
    """
    eps_hat = eps / 6.0
    layer_a = PeekLayer(session_a, prof, c=eps_hat, eps=eps_hat)
    layer_b = PeekLayer(session_b, prof, c=eps_hat, eps=eps_hat)
    x_mu = estimate_bounded_ratio(session_a, eps_hat, layer_b.peek, layer_a.peek)
    x_tau = estimate_bounded_ratio(session_b, eps_hat, layer_a.peek, layer_b.peek)
    return 0.5 * x_mu + 0.5 * x_tau


def _equivalence_core(session_a: OracleSession, session_b: OracleSession, eps: float,
                      prof: Profile) -> bool:
    """One instance of the ratio test: accept unless some sampled element's
    mass estimates on the two sides disagree by more than eps/4."""
    eps_hat = eps / 16.0
    layer_a = PeekLayer(session_a, prof, c=eps_hat, eps=eps_hat)
    layer_b = PeekLayer(session_b, prof, c=eps_hat, eps=eps_hat)
    for _ in range(math.ceil(3.0 / eps)):
        x = session_a.sample()
        p = layer_a.peek(x)
        q = layer_b.peek(x)
        if p <= 0.0:
            ratio_dev = 0.0 if q <= 0.0 else math.inf  # 0/0 agrees; q/0 is +inf
        else:
            ratio_dev = abs(q / p - 1.0)
        if ratio_dev > eps / 4.0:
            return False
    return True


def equivalence_test(session_a: OracleSession, session_b: OracleSession, eps: float,
                     prof: Profile) -> bool:
    """Distinguish identical distributions from eps-far ones (w.p. 2/3 each
    way): majority over independent core instances, with a hard shared budget
    of 540*Q + 1 samples that rejects on exhaustion."""
    q_ref = prof.equiv_budget_q
    if q_ref is None:
        raise ValueError(
            "equivalence_test needs a budget reference Q in the profile "
            "(the expected sample cost when the inputs are identical)"
        )
    budget = SampleBudget(540 * int(q_ref) + 1)
    session_a.set_budget(budget)
    session_b.set_budget(budget)
    votes = []
    try:
        for _ in range(prof.equiv_instances):
            votes.append(_equivalence_core(session_a, session_b, eps, prof))
    except BudgetExceeded:
        return False
    finally:
        session_a.set_budget(None)
        session_b.set_budget(None)
    return sum(votes) * 2 > len(votes)


def label_invariant_test(session: OracleSession, eps: float, prof: Profile,
                         property_distance) -> bool:
    """Universal tester for label-invariant properties: learn the histogram
    at eps/4, then accept iff the caller's distance callback (minimum
    sorted-matching TV from the learned distribution to the property) stays
    within eps/2."""
    learned = learn_histogram(session, eps / 4.0, prof)
    return property_distance(learned) <= eps / 2.0
