"""Exact brute-force oracles and statistical scaffolding for the test suite.

The enumeration oracles treat the ideal target set directly: every element no
heavier than the anchor is always a member, every element at least 1.2x
heavier never is, and the narrow band in between joins with exactly the
pairwise test's acceptance probability.  Joint expectations over (filter,
target-set) collapse to a single pass over subsets of the positive-mass
domain because per-element membership in (target ∩ filter) is an independent
Bernoulli with probability alpha * v_y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .dist import Distribution, scale_partition
from .profiles import Profile
from .target import exact_accept_probability

__all__ = [
    "ExactContext",
    "make_exact_context",
    "exact_s_gamma_w",
    "exact_expected_beta",
    "exact_expected_ratio",
    "exact_expected_h_beta",
    "uniform_expected_beta",
    "beta_lower_bound",
    "beta_upper_bound",
    "wilson_interval",
    "success_rate",
]

_ENUM_CAP = 12


@dataclass(frozen=True)
class ExactContext:
    """Distribution + anchor with exact test-acceptance and membership vectors.

    f_accept[y-1] is the canonical test's acceptance probability for y;
    v_member[y-1] is the ideal membership probability (1 on the light set, 0
    on the heavy set, f_accept on the medium band).
    """

    dist: Distribution
    x: int
    profile: Profile
    f_accept: np.ndarray
    v_member: np.ndarray


def make_exact_context(d: Distribution, x: int, prof: Profile) -> ExactContext:
    d._check_id(x)
    f = np.zeros(d.n)
    v = np.zeros(d.n)
    parts = scale_partition(d, x)
    eta = prof.target_eta
    for y in range(1, d.n + 1):
        if y == x:
            continue
        if d.mass(x) + d.mass(y) > 0.0:
            f[y - 1] = exact_accept_probability(
                d, x, y, eta, "lightweight", ell_multiplier=prof.ell_multiplier
            )
    for y in parts.light:
        v[y - 1] = 1.0
    for y in parts.medium:
        v[y - 1] = f[y - 1]
    # heavy stays 0
    return ExactContext(dist=d, x=x, profile=prof, f_accept=f, v_member=v)


def exact_s_gamma_w(ctx: ExactContext):
    """(s_x, gamma_x, w_x), exactly: scale mass, goal magnitude, weight."""
    d, x = ctx.dist, ctx.x
    s = float(np.dot(d.weights, ctx.v_member))
    mu_x = d.mass(x)
    gamma = mu_x / s if s > 0.0 else math.inf
    return s, gamma, mu_x + s


def _enum_states(ctx: ExactContext, alpha: float):
    """All subset masses of (target ∩ filter) with their probabilities.

    Only positive-mass non-anchor elements matter; each is in the joint set
    independently with probability alpha * v_y.
    """
    d, x = ctx.dist, ctx.x
    ids = [y for y in range(1, d.n + 1) if y != x and d.mass(y) > 0.0]
    if len(ids) > _ENUM_CAP:
        raise ValueError(f"enumeration oracle capped at {_ENUM_CAP} positive-mass elements")
    masses = np.asarray([0.0])
    probs = np.asarray([1.0])
    for y in ids:
        q = alpha * ctx.v_member[y - 1]
        w = d.mass(y)
        masses = np.concatenate([masses, masses + w])
        probs = np.concatenate([probs * (1.0 - q), probs * q])
    return masses, probs


def exact_expected_beta(ctx: ExactContext, alpha: float) -> float:
    """E[beta] = E[ m / (mu(x) + m) ] over the joint (filter, target) draw."""
    if alpha <= 0.0:
        return 0.0
    masses, probs = _enum_states(ctx, alpha)
    mu_x = ctx.dist.mass(ctx.x)
    denom = mu_x + masses
    vals = np.divide(masses, denom, out=np.zeros_like(masses), where=denom > 0.0)
    return float(np.dot(probs, vals))


def exact_expected_ratio(ctx: ExactContext, alpha: float) -> float:
    """E[beta/(1-beta)] = E[m]/mu(x) = alpha * s_x / mu(x)."""
    mu_x = ctx.dist.mass(ctx.x)
    if mu_x <= 0.0:
        raise ValueError("ratio expectation needs a positive-mass anchor")
    masses, probs = _enum_states(ctx, alpha)
    return float(np.dot(probs, masses)) / mu_x


def exact_expected_h_beta(ctx: ExactContext, alpha: float, eps: float) -> float:
    """E[min(beta/(1-beta), T)] with T = 8 ln(1/eps) + 100."""
    cap = 8.0 * math.log(1.0 / eps) + 100.0
    mu_x = ctx.dist.mass(ctx.x)
    masses, probs = _enum_states(ctx, alpha)
    if mu_x <= 0.0:
        vals = np.where(masses > 0.0, cap, 0.0)
    else:
        vals = np.minimum(masses / mu_x, cap)
    return float(np.dot(probs, vals))


def uniform_expected_beta(support: int, alpha: float) -> float:
    """Closed-form E[beta] for a uniform distribution over `support` atoms
    with the anchor inside: membership count is Bin(support-1, alpha) and
    beta = m/(m+1).  Exercises parameter ranges the 2^N oracle cannot reach;
    cross-checked against the enumeration oracle for small supports."""
    if support < 1:
        raise ValueError("support must be >= 1")
    ks = np.arange(support)
    pmf = binom.pmf(ks, support - 1, alpha)
    return float(np.dot(pmf, ks / (ks + 1.0)))


def beta_lower_bound(a: float) -> float:
    """Closed-form lower bound on E[beta] at a = alpha/gamma_x."""
    return (1.0 - math.exp(-a / 9.0)) * (1.0 - 3.0 / (3.0 + a))


def beta_upper_bound(a: float) -> float:
    """Closed-form upper bound on E[beta] at a = alpha/gamma_x."""
    root = math.sqrt(a * a + a)
    return 2.0 * root / (1.0 + a + root)


def wilson_interval(successes: int, trials: int, z: float = 1.96):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials**2)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def success_rate(runner, trials: int, seed_schedule=None, z: float = 1.96):
    """Empirical success rate of runner(seed) over a deterministic schedule,
    with its Wilson interval.  Returns (rate, lo, hi)."""
    if seed_schedule is None:
        seed_schedule = range(trials)
    seeds = list(seed_schedule)[:trials]
    if len(seeds) != trials:
        raise ValueError("seed schedule shorter than the trial count")
    wins = sum(bool(runner(s)) for s in seeds)
    lo, hi = wilson_interval(wins, trials, z)
    return wins / trials, lo, hi
