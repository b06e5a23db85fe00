"""condest: probability-mass estimation from conditional samples.

A simulated conditional-sampling oracle stack, a doubly-logarithmic
saturation-aware mass estimator built on pairwise comparison tests, lazily
drawn target sets and an uncertain-comparator binary search, plus three
applications (histogram learning, total-variation estimation, equivalence
testing), all verified against exact brute-force oracles on small domains.
"""

from .dist import (
    Distribution,
    make_distribution,
    cdf_mu,
    scale_partition,
    tv_distance,
    min_perm_tv,
    gen_dk,
    gen_named,
    load_distribution,
    save_distribution,
)
from .oracle import (
    OracleSession,
    Explicit,
    Pair,
    FilterUnion,
    ZeroPolicy,
    ERR_SYMBOL,
    sample,
    sample_conditional,
    conditional_mass,
    read_counters,
)
from .profiles import Profile, make_profile, target_error
from .target import (
    target_test,
    target_test_gross,
    target_test_lightweight,
    target_test_explicit,
    exact_accept_probability,
)
from .vx import VxObject, initialize_new_vx, vx_query
from .estimators import (
    TOO_LOW,
    is_too_low,
    median_of,
    saturation_aware_est,
    est_expected_beta,
    est_single_beta,
    h_of,
    est_expected_h_beta,
)
from .search import (
    Verdict,
    uncertain_comparator,
    strict_binary_search,
    find_good_alpha,
    find_good_alpha_report,
)
from .pipeline import preamble, estimate_single, estimate_single_report, profile
from .applications import (
    PeekLayer,
    learn_histogram_buckets,
    solve_bucket_constraints,
    learn_histogram,
    estimate_bounded_ratio,
    estimate_dtv,
    equivalence_test,
    label_invariant_test,
)

__version__ = "0.1.0"
