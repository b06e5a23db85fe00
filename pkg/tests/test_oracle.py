import numpy as np
import pytest

from condest.dist import gen_named, make_distribution
from condest.oracle import (
    ERR_SYMBOL,
    BudgetExceeded,
    Explicit,
    FilterUnion,
    OracleSession,
    Pair,
    SampleBudget,
    ZeroPolicy,
    conditional_mass,
    filter_contains,
    hash64,
    read_counters,
    sample,
    sample_conditional,
)


def test_point_mass_always_support():
    s = OracleSession(gen_named("point_mass", 4), 0)
    assert all(sample(s) == 1 for _ in range(50))


def test_uniform_frequencies_chernoff():
    d = gen_named("uniform", 4)
    s = OracleSession(d, 123)
    draws = s.sample_many(100_000)
    for x in range(1, 5):
        freq = np.mean(draws == x)
        assert abs(freq - 0.25) <= 0.01


def test_seeded_reproducibility():
    d = gen_named("zipf", 6)
    a = OracleSession(d, 9)
    b = OracleSession(d, 9)
    assert [sample(a) for _ in range(30)] == [sample(b) for _ in range(30)]


def test_pair_conditional_symmetry():
    d = gen_named("uniform", 6)
    s = OracleSession(d, 5)
    draws = [sample_conditional(s, Pair(2, 5)) for _ in range(4000)]
    frac = np.mean(np.asarray(draws) == 2)
    assert abs(frac - 0.5) <= 0.03


def test_zero_mass_explicit_error_symbol():
    d = gen_named("point_mass", 3)
    s = OracleSession(d, 0)
    assert sample_conditional(s, Explicit((3,))) is ERR_SYMBOL
    assert s.zero_mass_requests == 1


def test_zero_mass_uniform_fallback():
    d = gen_named("point_mass", 3)
    s = OracleSession(d, 0, zero_policy=ZeroPolicy.UNIFORM_FALLBACK)
    draws = {sample_conditional(s, Explicit((2, 3))) for _ in range(60)}
    assert draws == {2, 3}


def test_filter_alpha_one_is_unconditional():
    d = gen_named("uniform", 8)
    s = OracleSession(d, 11)
    c = FilterUnion(filter_seed=7, alpha=1.0, anchor=1)
    draws = np.asarray([sample_conditional(s, c) for _ in range(20_000)])
    for x in range(1, 9):
        assert abs(np.mean(draws == x) - 0.125) < 0.02


def test_conditional_mass_examples():
    d = make_distribution([1, 2, 3, 4])
    s = OracleSession(d, 0)
    assert conditional_mass(s, Explicit((1, 2, 3, 4))) == pytest.approx(1.0)
    assert conditional_mass(s, Pair(1, 2)) == pytest.approx(0.3)
    assert conditional_mass(s, FilterUnion(filter_seed=3, alpha=0.0, anchor=2)) == pytest.approx(0.2)


def test_simulation_fidelity_five_sigma():
    d = make_distribution([1, 2, 3, 4, 0, 6])
    s = OracleSession(d, 77)
    c = Explicit((1, 3, 6))
    n = 100_000
    draws = np.asarray([sample_conditional(s, c) for _ in range(n)])
    mass_c = conditional_mass(s, c)
    for y in (1, 3, 6):
        p = d.mass(y) / mass_c
        freq = float(np.mean(draws == y))
        sigma = np.sqrt(p * (1 - p) / n)
        assert abs(freq - p) <= 5 * sigma + 1e-12


def test_filter_membership_deterministic():
    c = FilterUnion(filter_seed=99, alpha=0.3, anchor=4, extras=(9,))
    first = [filter_contains(c, y) for y in range(1, 40)]
    second = [filter_contains(c, y) for y in range(1, 40)]
    assert first == second
    assert filter_contains(c, 4) and filter_contains(c, 9)


def test_filter_membership_rate():
    hits = 0
    ids = np.arange(1, 20_001)
    h = hash64(123, ids)
    hits = int(np.sum(h < np.uint64(int(0.3 * 2**64))))
    assert abs(hits / 20_000 - 0.3) < 0.02


def test_counters_and_phases():
    d = gen_named("uniform", 3)
    s = OracleSession(d, 0)
    assert read_counters(s) == {}
    with s.phase("preamble"):
        for _ in range(3):
            sample(s)
    assert read_counters(s) == {"preamble": 3}
    sample(s)
    assert read_counters(s) == {"preamble": 3, "default": 1}


def test_nested_phase_forbidden():
    s = OracleSession(gen_named("uniform", 3), 0)
    with s.phase("a"):
        with pytest.raises(RuntimeError):
            with s.phase("b"):
                pass


def test_counters_monotone():
    s = OracleSession(gen_named("uniform", 3), 0)
    last = 0
    for _ in range(10):
        sample(s)
        total = sum(read_counters(s).values())
        assert total > last
        last = total


def test_count_pair_hits_accounting():
    d = gen_named("uniform", 4)
    s = OracleSession(d, 2)
    hits = s.count_pair_hits(1, 2, 1000)
    assert 0 <= hits <= 1000
    assert read_counters(s) == {"default": 1000}


def test_sample_budget_exhaustion():
    s = OracleSession(gen_named("uniform", 4), 0)
    s.set_budget(SampleBudget(10))
    s.sample_many(10)
    with pytest.raises(BudgetExceeded):
        sample(s)
    assert sum(read_counters(s).values()) == 10
