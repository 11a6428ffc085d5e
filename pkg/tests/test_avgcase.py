import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genericity import avgcase
from genericity.avgcase import (
    DEFAULT_FAMILY,
    AvgVerdict,
    LevinTolerances,
    MeasuredFunction,
    Polynomial,
    PremiseViolated,
    crossover,
    expected_on_sphere,
    exponential_length,
    generic_bound_series,
    huge_on_zero_word,
    impagliazzo_check,
    levin_check,
    markov_generic_bound,
    separation_report,
    spike,
    uniform_binary,
)
from genericity.density import binary_words


def enumerated(f, mu, label="enum"):
    """Same function without a closed-form profile, so spheres are enumerated."""
    return MeasuredFunction(f, mu, binary_words(), None, label)


class TestSphereExpectation:
    @pytest.mark.parametrize("n", [0, 1, 5, 9])
    def test_constant(self, n):
        assert expected_on_sphere(uniform_binary(lambda m: 1, "one"), n) == 1

    @pytest.mark.parametrize("n", [1, 4, 8])
    def test_constant_on_sphere(self, n):
        assert expected_on_sphere(uniform_binary(lambda m: 2**m, "exp"), n) == 2**n
        assert expected_on_sphere(uniform_binary(lambda m: m * m, "sq"), n) == n * n

    def test_profile_matches_enumeration(self):
        closed = huge_on_zero_word()
        enum = enumerated(closed.evaluate, closed.mu)
        for n in range(0, 7):
            assert expected_on_sphere(closed, n) == pytest.approx(expected_on_sphere(enum, n))

    def test_non_uniform_weights(self):
        # weight 3 on words starting with 1, weight 1 otherwise; f = number of ones
        mf = enumerated(lambda w: w.count("1"), lambda w: 3 if w.startswith("1") else 1)
        # sphere 2: 00 (0,w1), 01 (1,w1), 10 (1,w3), 11 (2,w3) -> (0+1+3+6)/8
        assert expected_on_sphere(mf, 2) == pytest.approx(10 / 8)


class TestLevin:
    def test_example_half(self):
        rep = levin_check(exponential_length(), Fraction(1, 2), 200)
        assert rep.verdict is AvgVerdict.CONVERGES
        oracle = math.fsum(2 ** (-n / 2 - 1) / n for n in range(1, 201))
        assert rep.values[-1] == pytest.approx(oracle, rel=1e-12)
        assert rep.horizon == 200 and rep.ns[0] == 1

    def test_example_one(self):
        rep = levin_check(exponential_length(), 1, 200)
        assert rep.verdict is AvgVerdict.DIVERGES
        assert rep.values[-1] == pytest.approx(math.fsum(1 / (2 * n) for n in range(1, 201)), rel=1e-12)

    def test_direct_summation_agrees(self):
        mf = exponential_length()
        enum = enumerated(mf.evaluate, mf.mu)
        a = levin_check(mf, Fraction(1, 2), 12)
        b = levin_check(enum, Fraction(1, 2), 12)
        assert a.values == pytest.approx(b.values, rel=1e-12)

    def test_constant_converges(self):
        rep = levin_check(MeasuredFunction(lambda w: 1, avgcase.example_mu, binary_words(),
                                           lambda n: [(1, Fraction(1, 2 ** (n + 1)), 1)]), 1, 200)
        assert rep.verdict is AvgVerdict.CONVERGES

    def test_dual_diverges(self):
        assert levin_check(huge_on_zero_word(), Fraction(1, 2), 200).verdict is AvgVerdict.DIVERGES

    def test_bound_triggers(self):
        rep = levin_check(exponential_length(), 1, 200, LevinTolerances(bound=1.0))
        assert rep.verdict is AvgVerdict.DIVERGES and "exceeds" in rep.note

    def test_report_serializes(self):
        d = levin_check(exponential_length(), Fraction(1, 2), 30).to_dict()
        assert d["criterion"] == "levin" and d["horizon"] == 30
        assert d["parameters"]["size_zero_excluded"] is True
        assert d["verdict"] == "converges-at-horizon"

    def test_bad_eps(self):
        with pytest.raises(ValueError):
            levin_check(exponential_length(), 0, 10)


class TestImpagliazzo:
    def test_constant(self):
        rep = impagliazzo_check(uniform_binary(lambda m: 1, "one"), 1, range(1, 41))
        assert rep.verdict is AvgVerdict.BOUNDED

    def test_length(self):
        rep = impagliazzo_check(uniform_binary(lambda m: m, "len"), 1, range(1, 41))
        assert rep.verdict is AvgVerdict.BOUNDED
        assert max(rep.values) <= 1

    def test_exponential_half(self):
        rep = impagliazzo_check(uniform_binary(lambda m: 2**m, "exp"), Fraction(1, 2), range(1, 41))
        assert rep.verdict is AvgVerdict.UNBOUNDED

    def test_ball_expectation_oracle(self):
        # uniform ball of radius n: sum_m 2^m * m / (2^(n+1) - 1)
        mf = uniform_binary(lambda m: m, "len")
        for n in (1, 5, 12):
            oracle = Fraction(sum(m * 2**m for m in range(n + 1)), 2 ** (n + 1) - 1)
            assert avgcase.ball_expectation(mf, n) == pytest.approx(float(oracle), rel=1e-12)

    def test_agrees_with_levin_on_example(self):
        mf = exponential_length()
        assert levin_check(mf, Fraction(1, 2), 200).verdict is AvgVerdict.CONVERGES
        assert impagliazzo_check(mf, Fraction(1, 2), range(1, 201)).verdict is AvgVerdict.BOUNDED


class TestMarkov:
    def test_constant(self):
        res = markov_generic_bound(uniform_binary(lambda m: 1, "one"), 1, 1, lambda n: n, range(1, 20))
        assert res.holds and set(res.violation_mass) == {0}

    def test_length(self):
        res = markov_generic_bound(uniform_binary(lambda m: m, "len"), 1, 1, lambda n: n * n, range(1, 20))
        assert res.holds and set(res.violation_mass) == {0}

    @pytest.mark.parametrize("t", [2, 5])
    def test_spike_exact_mass(self, t):
        q = lambda n: n + 1  # noqa: E731
        res = markov_generic_bound(spike(1, q, t), 1, 1, q, range(1, 30))
        assert res.holds
        assert list(res.violation_mass) == [Fraction(1, t * q(n)) for n in range(1, 30)]
        assert res.bound(3) == 1 * q(3) * 3

    def test_spike_at_threshold_is_not_a_violation(self):
        # with t=1 the spike equals c*n*q(n) and the violation set is strict
        q = lambda n: n + 1  # noqa: E731
        res = markov_generic_bound(spike(1, q, 1), 1, 1, q, range(1, 10))
        assert set(res.violation_mass) == {0}

    def test_premise_violation(self):
        with pytest.raises(PremiseViolated) as info:
            markov_generic_bound(uniform_binary(lambda m: m * m, "sq"), 1, 1, lambda n: n, [1, 2, 3])
        assert info.value.n == 2

    def test_k_root(self):
        # f = n^2 on sphere n has E f^(1/2) = n, so c=1, k=2 holds
        res = markov_generic_bound(uniform_binary(lambda m: m * m, "sq"), 1, 2, lambda n: n, range(1, 15))
        assert res.holds and res.bound(4) == (4 * 4) ** 2

    @given(st.integers(1, 5), st.integers(1, 4), st.integers(1, 6), st.integers(1, 3))
    @settings(max_examples=60, deadline=None)
    def test_guarantee_on_random_spikes(self, c, t, a, k):
        q = lambda n: a * n  # noqa: E731
        base = spike(c, q, t)
        # raising to the k-th power keeps E f^(1/k) = c n
        mf = MeasuredFunction(base.evaluate, base.mu, base.domain,
                              lambda n: [(v**k, w, m) for v, w, m in base.profile(n)], "spike-k")
        res = markov_generic_bound(mf, c, k, q, range(1, 12))
        assert all(m <= Fraction(1, q(n)) for m, n in zip(res.violation_mass, res.ns))


class TestSeparation:
    @pytest.mark.parametrize("p,n0", [(Polynomial(1, 10), 59), (Polynomial(1, 0), 1), (Polynomial(100, 12), 84)])
    def test_crossover(self, p, n0):
        N = crossover(p)
        assert N == n0
        assert all(2**n > p(n) for n in range(N, N + 500))
        assert 2 ** (N - 1) <= p(N - 1)

    def test_crossover_oracle_via_logs(self):
        for p in DEFAULT_FAMILY:
            N = crossover(p)
            # n = 0 fails only for constants; elsewhere compare logarithms
            below = [0] if p.degree == 0 else []
            below += [n for n in range(1, 200)
                      if n * math.log(2) <= math.log(p.coefficient) + p.degree * math.log(n) + 1e-9]
            assert N == (max(below) + 1 if below else 0)

    def test_generic_bound_series(self):
        f = exponential_length()
        s = generic_bound_series(f, Polynomial(1, 10), range(55, 65))
        assert [p.hits for p in s.points][-6:] == [0] * 6
        assert s.points[0].estimate == 1

    def test_dual_generic_frequencies(self):
        g = huge_on_zero_word()
        s = generic_bound_series(g, Polynomial(1, 0), range(1, 30))
        assert [p.estimate for p in s.points] == [Fraction(2**n - 1, 2**n) for n in range(1, 30)]

    def test_report(self):
        rep = separation_report(n_list=range(1, 81), horizon=120)
        assert rep.levin.verdict is AvgVerdict.CONVERGES
        assert rep.levin_eps_one.verdict is AvgVerdict.DIVERGES
        assert all(rep.generic_fails.values()) and len(rep.generic_fails) == 39
        assert rep.dual_levin.verdict is AvgVerdict.DIVERGES
        assert rep.incomparable
        assert rep.to_dict()["incomparable"] is True


def test_huge_values_are_exact_enough():
    g = huge_on_zero_word()
    v = g.profile(300)[0][0]
    assert mpmath.log(v, 2) == pytest.approx(2**300, rel=1e-12)
