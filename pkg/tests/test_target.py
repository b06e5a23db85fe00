import math

import numpy as np
import pytest

from condest.dist import gen_named, make_distribution
from condest.oracle import OracleSession, ZeroMassError, read_counters
from condest.profiles import make_profile, target_error
from condest.target import (
    exact_accept_probability,
    lightweight_ell,
    target_test,
    target_test_explicit,
    target_test_gross,
    target_test_lightweight,
)

DESK = make_profile("desk", c=0.05, eps=0.2)


class TestTargetError:
    def test_paper_three_term_minimum(self):
        # c=0.01, eps=0.05: min(1.25e-4, 1e-9, ~1.08e-30) -> the eps^5 term
        eta = target_error(0.01, 0.05, "paper")
        t3 = 0.05**5 / (1.2e21 * math.log(1 / 0.05) ** 5)
        assert eta == pytest.approx(t3)
        assert 1e-30 < eta < 1.2e-30

    def test_desk_default(self):
        assert target_error(0.05, 0.2, "desk") == pytest.approx(1e-3)

    def test_desk_capped_by_product_term(self):
        # small eps*c/4 takes over the configured constant
        assert target_error(0.01, 0.05, "desk") == pytest.approx(0.01 * 0.05 / 4)

    def test_lazy_budget_inequality(self):
        # eta * 9e19 * ln(1/eps)^5 / eps^5 < 1/12 for every paper eta
        for c, eps in ((0.01, 0.05), (0.05, 0.1), (0.001, 0.01)):
            eta = target_error(c, eps, "paper")
            assert eta * 9e19 * math.log(1 / eps) ** 5 / eps**5 < 1 / 12

    def test_paper_range_validation(self):
        with pytest.raises(ValueError):
            target_error(0.05, 0.2, "paper")
        with pytest.raises(ValueError):
            target_error(0.2, 0.05, "paper")
        with pytest.raises(ValueError):
            target_error(0.05, 0.05, "nope")


class TestLightweight:
    def test_self_rejects_without_samples(self):
        s = OracleSession(gen_named("uniform", 4), 0)
        assert target_test_lightweight(s, 2, 2, 1e-3) is False
        assert read_counters(s) == {}

    def test_equal_mass_acceptance_rate(self):
        d = gen_named("uniform", 2)
        s = OracleSession(d, 31)
        acc = sum(target_test_lightweight(s, 1, 2, 1e-3) for _ in range(1000))
        assert acc >= 995

    def test_double_mass_rejection_rate(self):
        d = make_distribution([1.0, 2.0])
        s = OracleSession(d, 32)
        rej = sum(not target_test_lightweight(s, 1, 2, 1e-3) for _ in range(1000))
        assert rej >= 995

    def test_sample_cost_exactly_ell(self):
        d = gen_named("uniform", 3)
        s = OracleSession(d, 1)
        eta = 1e-3
        target_test_lightweight(s, 1, 2, eta)
        assert sum(read_counters(s).values()) == lightweight_ell(eta)

    def test_zero_mass_pair_propagates_policy(self):
        d = gen_named("point_mass", 3)
        s = OracleSession(d, 0)
        with pytest.raises(ZeroMassError):
            target_test_lightweight(s, 2, 3, 1e-3)


class TestExplicit:
    def test_self_rejects(self):
        s = OracleSession(gen_named("uniform", 4), 0)
        assert target_test_explicit(s, 3, 3, 0.1, kappa=0.01) is False

    def test_ell_formula(self):
        # kappa=0.01, eta=0.1 -> ceil(ln 10 / 0.0002) = 11513
        assert math.ceil(math.log(10) / (2 * 0.01**2)) == 11513
        d = gen_named("uniform", 2)
        s = OracleSession(d, 3)
        target_test_explicit(s, 1, 2, 0.1, kappa=0.01)
        assert sum(read_counters(s).values()) == 11513

    def test_default_kappa_bad_band(self):
        kappa = 2e-11
        band = 2 * kappa / (6 / 11 - 1 / 2 - 2 * kappa)
        assert band <= 1e-9

    def test_separation(self):
        d = make_distribution([1.0, 2.0])
        s = OracleSession(d, 4)
        rej = sum(not target_test_explicit(s, 1, 2, 0.05, kappa=0.02) for _ in range(50))
        assert rej >= 45


class TestCanonicalAndGross:
    def test_uniform_accepts(self):
        d = gen_named("uniform", 6)
        s = OracleSession(d, 5)
        acc = sum(target_test(s, 1, y, DESK) for y in (2, 3, 4) for _ in range(100))
        assert acc >= 295

    def test_heavy_rejects(self):
        d = make_distribution([1.0, 1.2, 1.0])
        s = OracleSession(d, 6)
        rej = sum(not target_test(s, 1, 2, DESK) for _ in range(200))
        assert rej >= 195

    def test_deterministic_under_fixed_seed(self):
        d = make_distribution([1.0, 1.1])
        outs = []
        for _ in range(2):
            s = OracleSession(d, 1234)
            outs.append([target_test(s, 1, 2, DESK) for _ in range(20)])
        assert outs[0] == outs[1]

    def test_gross_same_procedure_at_desk(self):
        # desk gross eta == canonical eta -> identical sequence under one seed
        d = make_distribution([1.0, 1.05])
        a = OracleSession(d, 7)
        b = OracleSession(d, 7)
        seq_canonical = [target_test(a, 1, 2, DESK) for _ in range(10)]
        seq_gross = [target_test_gross(b, 1, 2, DESK) for _ in range(10)]
        assert seq_canonical == seq_gross

    def test_gross_paper_error_budget(self):
        prof = make_profile("paper", c=0.05, eps=0.05)
        assert prof.gross_target_eta <= 1e-9
        d = gen_named("uniform", 2)
        f = exact_accept_probability(d, 1, 2, prof.gross_target_eta)
        assert f >= 1 - 1e-9


class TestExactAcceptProbability:
    def test_equal_mass_paper_eta(self):
        d = gen_named("uniform", 2)
        f = exact_accept_probability(d, 1, 2, 1e-9)
        assert f >= 1 - 1e-9

    def test_heavy_boundary_paper_eta(self):
        d = make_distribution([1.0, 1.2])
        f = exact_accept_probability(d, 1, 2, 1e-9)
        assert f <= 1e-9

    def test_zero_mass_target_accepts_surely(self):
        d = gen_named("point_mass", 2)
        assert exact_accept_probability(d, 1, 2, 1e-3) == 1.0

    def test_self_is_zero(self):
        d = gen_named("uniform", 2)
        assert exact_accept_probability(d, 1, 1, 1e-3) == 0.0

    def test_monotone_in_mass_ratio(self):
        vals = []
        for r in np.linspace(0.5, 2.0, 10):
            d = make_distribution([1.0, r])
            vals.append(exact_accept_probability(d, 1, 2, 1e-3))
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_explicit_kind_integrates_threshold(self):
        d = gen_named("uniform", 2)
        f = exact_accept_probability(d, 1, 2, 0.05, "explicit", kappa=0.02)
        assert 0.9 <= f <= 1.0
        d2 = make_distribution([1.0, 2.0])
        f2 = exact_accept_probability(d2, 1, 2, 0.05, "explicit", kappa=0.02)
        assert f2 <= 0.1

    def test_empirical_matches_exact_over_grid(self):
        # acceptance frequency within 3 binomial sigmas of the exact value
        trials = 400
        for ratio in (0.5, 0.8, 1.0, 1.2, 1.5, 2.0):
            d = make_distribution([1.0, ratio])
            s = OracleSession(d, hash(ratio) % 2**32)
            f = exact_accept_probability(d, 1, 2, DESK.target_eta)
            acc = sum(target_test(s, 1, 2, DESK) for _ in range(trials))
            sigma = math.sqrt(trials * f * (1 - f))
            assert abs(acc - trials * f) <= 3 * sigma + 1e-9
