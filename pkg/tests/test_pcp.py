import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genericity import pcp
from genericity.density import Answer, CapExceeded, Geometry, frequency
from genericity.pcp import (
    InstanceFormatError,
    PcpInstance,
    SearchExhausted,
    algorithm_two,
    has_prefix_pair,
    search_solution,
    search_solution_brute,
)


def inst(*pairs, k=2):
    return PcpInstance(k, tuple(pairs))


def all_words(n, k):
    return ["".join(t) for ell in range(1, n + 1) for t in itertools.product("0123456789"[:k], repeat=ell)]


def solves(instance, seq):
    return bool(seq) and "".join(instance.pairs[i - 1][0] for i in seq) == "".join(
        instance.pairs[i - 1][1] for i in seq
    )


@st.composite
def instances(draw, max_pairs=3, max_word=3, k=2):
    word = st.text(alphabet="0123456789"[:k], min_size=1, max_size=max_word)
    pairs = draw(st.lists(st.tuples(word, word), min_size=1, max_size=max_pairs))
    return PcpInstance(k, tuple(pairs))


class TestInstance:
    def test_invariants(self):
        with pytest.raises(ValueError):
            inst(("", "0"))
        with pytest.raises(ValueError):
            inst(("2", "0"))
        with pytest.raises(ValueError):
            PcpInstance(1, (("0", "0"),))

    def test_sphere_membership(self):
        assert inst(("01", "1"), ("0", "11")).in_sphere(2)
        assert not inst(("011", "1"), ("0", "11")).in_sphere(2)
        assert not inst(("0", "1")).in_sphere(2)

    def test_text_format(self):
        i = inst(("01", "0"), ("1", "011"))
        assert i.to_text() == "2; 01,0; 1,011"
        assert PcpInstance.from_text("2;01,0 ;1, 011") == i

    @given(instances(k=3))
    def test_round_trips(self, i):
        assert PcpInstance.from_text(i.to_text()) == i
        assert PcpInstance.from_json(i.to_json()) == i

    @pytest.mark.parametrize("line", ["x; 0,1", "2; 0", "2; 0,1,1", "2; 0,", "2; 0,2"])
    def test_text_errors(self, line):
        with pytest.raises(InstanceFormatError):
            PcpInstance.from_text(line)


class TestAlgorithmTwo:
    def test_prefix_examples(self):
        assert has_prefix_pair(inst(("0", "0")))
        assert not has_prefix_pair(inst(("0", "1")))
        assert has_prefix_pair(inst(("01", "0")))

    def test_verdict_examples(self):
        assert algorithm_two(inst(("0", "1"), ("10", "11"))).answer is Answer.NO
        assert algorithm_two(inst(("0", "0"))).answer is Answer.DONT_KNOW
        assert algorithm_two(inst(("01", "0"), ("1", "11"))).answer is Answer.DONT_KNOW

    @given(instances(max_pairs=6, max_word=8, k=3))
    def test_steps_linear(self, i):
        v = algorithm_two(i)
        assert v.steps <= sum(len(u) + len(w) for u, w in i.pairs)
        assert (v.answer is Answer.NO) == (not has_prefix_pair(i))

    @given(instances())
    @settings(max_examples=200)
    def test_soundness(self, i):
        if algorithm_two(i).answer is Answer.NO:
            assert search_solution(i, 6) is None

    def test_soundness_exhaustive_n2(self):
        no = 0
        for i in pcp.enumerate_sphere(2, 2):
            if algorithm_two(i).answer is Answer.NO:
                no += 1
                assert search_solution(i, 6) is None
        assert no == 484


class TestSearch:
    def test_examples(self):
        assert search_solution(inst(("0", "0")), 1) == [1]
        assert search_solution(inst(("0", "1")), 8) is None
        assert search_solution(inst(("01", "0"), ("1", "011")), 4) is None
        assert search_solution_brute(inst(("01", "0"), ("1", "011")), 4) is None

    def test_classic_instance(self):
        # a textbook instance whose shortest solution has length 4
        i = inst(("1", "101"), ("10", "00"), ("011", "11"))
        seq = search_solution(i, 6)
        assert seq is not None and solves(i, seq)
        assert len(seq) == len(search_solution_brute(i, 6))

    def test_state_cap(self):
        hard = inst(("0", "0000000001"), ("1", "0"))
        with pytest.raises(SearchExhausted):
            search_solution(hard, 40, state_cap=3)
        assert search_solution(inst(("1", "111"), ("11", "1")), 3) == [1, 2, 2]

    def test_precondition(self):
        with pytest.raises(ValueError):
            search_solution(inst(("0", "0")), 0)

    @given(instances(max_pairs=3, max_word=3))
    @settings(max_examples=300, deadline=None)
    def test_matches_brute(self, i):
        fast = search_solution(i, 4)
        slow = search_solution_brute(i, 4)
        assert (fast is None) == (slow is None)
        if fast is not None:
            assert solves(i, fast) and len(fast) == len(slow)


class TestCounting:
    def test_sphere_counts(self):
        assert pcp.sphere_count(1, 2).direct == 4
        assert pcp.sphere_count(1, 2).closed_formula == 9
        assert pcp.sphere_count(2, 2).direct == 1296
        assert pcp.sphere_count(1, 3).direct == 9

    def test_enumeration(self):
        assert sum(1 for _ in pcp.enumerate_sphere(1, 2)) == 4
        got = list(pcp.enumerate_sphere(2, 2))
        assert len(got) == 1296 == len(set(got))
        assert all(i.in_sphere(2) for i in got)
        with pytest.raises(CapExceeded):
            next(pcp.enumerate_sphere(3, 2, cap=1000))

    @pytest.mark.parametrize(
        "n,k,value", [(1, 2, Fraction(4, 3)), (2, 2, Fraction(12, 7)), (10, 2, Fraction(220, 2047))]
    )
    def test_bound(self, n, k, value):
        assert pcp.prefix_pair_bound(n, k) == value

    def test_exact_frequencies(self):
        dom = pcp.domain(2)
        no1 = frequency(dom, lambda i: not has_prefix_pair(i), 1)
        no2 = frequency(dom, lambda i: not has_prefix_pair(i), 2)
        assert (no1.estimate, no2.estimate) == (Fraction(2, 4), Fraction(121, 324))
        assert 1 - no2.estimate == Fraction(203, 324)

    @pytest.mark.parametrize("n,k", [(1, 2), (2, 2), (3, 2), (1, 3), (2, 3), (3, 3)])
    def test_prefix_pairs_against_brute(self, n, k):
        words = all_words(n, k)
        brute = sum(u.startswith(v) or v.startswith(u) for u in words for v in words)
        assert pcp.prefix_word_pairs(n, k) == brute == pcp.prefix_word_pairs_brute(n, k)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_per_pair_independence(self, n):
        p = pcp.single_pair_prefix_probability(n, 2)
        assert Fraction(pcp.no_prefix_sphere_hits(n, 2), pcp.sphere_count(n, 2).direct) == (1 - p) ** n

    def test_counted_matches_enumeration(self):
        for n in (1, 2):
            hits = sum(not has_prefix_pair(i) for i in pcp.enumerate_sphere(n, 2))
            assert hits == pcp.no_prefix_sphere_hits(n, 2)

    def test_exact_below_bound(self):
        for n in range(1, 40):
            freq = 1 - Fraction(pcp.no_prefix_sphere_hits(n, 2), pcp.sphere_count(n, 2).direct)
            bound = pcp.prefix_pair_bound(n, 2)
            if bound <= 1:
                assert freq <= bound


class TestSampling:
    def test_reproducible(self):
        a = pcp.sample_sphere(6, 2, np.random.default_rng(1))
        assert a == pcp.sample_sphere(6, 2, np.random.default_rng(1))

    @given(st.integers(1, 80), st.integers(2, 4), st.integers(0, 2**32))
    @settings(max_examples=60)
    def test_invariants(self, n, k, seed):
        i = pcp.sample_sphere(n, k, np.random.default_rng(seed))
        assert i.k == k and i.in_sphere(n)

    def test_uniform_over_n1(self):
        rng = np.random.default_rng(9)
        counts = {}
        for _ in range(8000):
            key = pcp.sample_sphere(1, 2, rng)
            counts[key] = counts.get(key, 0) + 1
        assert len(counts) == 4
        assert all(abs(c / 8000 - 0.25) < 0.03 for c in counts.values())

    @pytest.mark.parametrize("n", [2, 5, 9])
    def test_vectorised_path_matches_scalar(self, n):
        trials = 3000
        fast = pcp.mc_prefix_frequency(n, 2, trials, np.random.default_rng(n))
        rng = np.random.default_rng(n)
        slow = sum(has_prefix_pair(pcp.sample_sphere(n, 2, rng)) for _ in range(trials))
        assert fast.hits == slow and fast.trials == trials

    def test_prefix_predicate_counts(self):
        dom = pcp.domain(2)
        for n in (1, 2):
            a = frequency(dom, pcp.prefix_predicate(2), n, Geometry.BALL)
            b = frequency(dom, has_prefix_pair, n, Geometry.BALL)
            assert a == b
