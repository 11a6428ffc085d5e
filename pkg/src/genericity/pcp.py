"""Post Correspondence Problem instances and the prefix-pair partial algorithm.

Words are strings over the first ``k`` characters of ``0-9a-z``.  The sphere
of radius ``n`` holds the instances with exactly ``n`` pairs whose words all
have length between 1 and ``n``.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .density import (
    Answer,
    CapExceeded,
    CountedPredicate,
    FrequencyPoint,
    GenericityError,
    PartialVerdict,
    SizedDomain,
    as_generator,
    uniform_below,
)

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"
DEFAULT_ENUM_CAP = 10**7
DEFAULT_STATE_CAP = 10**6
_MC_CHUNK = 50_000


class InstanceFormatError(ValueError):
    pass


class SearchExhausted(GenericityError):
    """The bounded solution search hit its state cap before finishing."""


@dataclass(frozen=True)
class PcpInstance:
    k: int
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not 2 <= self.k <= len(DIGITS):
            raise ValueError(f"alphabet size must be in [2, {len(DIGITS)}]")
        object.__setattr__(self, "pairs", tuple((u, v) for u, v in self.pairs))
        letters = set(DIGITS[: self.k])
        for u, v in self.pairs:
            if not u or not v:
                raise ValueError("words must be nonempty")
            if not set(u) <= letters or not set(v) <= letters:
                raise ValueError(f"pair ({u}, {v}) uses letters outside the alphabet")

    @property
    def size(self) -> int:
        return len(self.pairs)

    def in_sphere(self, n: int) -> bool:
        return len(self.pairs) == n and all(len(u) <= n and len(v) <= n for u, v in self.pairs)

    def to_text(self) -> str:
        return "; ".join([str(self.k)] + [f"{u},{v}" for u, v in self.pairs])

    @classmethod
    def from_text(cls, line: str) -> PcpInstance:
        fields = [f.strip() for f in line.strip().split(";")]
        try:
            k = int(fields[0])
        except ValueError:
            raise InstanceFormatError(f"expected alphabet size, got {fields[0]!r}") from None
        pairs = []
        for f in fields[1:]:
            words = f.split(",")
            if len(words) != 2:
                raise InstanceFormatError(f"malformed pair {f!r}")
            pairs.append((words[0].strip(), words[1].strip()))
        try:
            return cls(k, tuple(pairs))
        except ValueError as exc:
            raise InstanceFormatError(str(exc)) from None

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "pairs": [list(p) for p in self.pairs]})

    @classmethod
    def from_json(cls, text: str) -> PcpInstance:
        data = json.loads(text)
        return cls(data["k"], tuple(tuple(p) for p in data["pairs"]))


def _prefix_related(u: str, v: str) -> bool:
    return u.startswith(v) or v.startswith(u)


def has_prefix_pair(inst: PcpInstance) -> bool:
    return any(_prefix_related(u, v) for u, v in inst.pairs)


def algorithm_two(inst: PcpInstance) -> PartialVerdict:
    """No when no pair has one word a prefix of the other; otherwise DontKnow.

    Steps count letter comparisons, so they are linear in the input length.
    """
    fuel = max(1, sum(len(u) + len(v) for u, v in inst.pairs))
    steps = 0
    for u, v in inst.pairs:
        m = min(len(u), len(v))
        i = 0
        while i < m and u[i] == v[i]:
            i += 1
        steps += min(i + 1, m)
        if i == m:
            return PartialVerdict(Answer.DONT_KNOW, steps, fuel)
    return PartialVerdict(Answer.NO, steps, fuel)


def search_solution(
    inst: PcpInstance, max_len: int, state_cap: int = DEFAULT_STATE_CAP
) -> list[int] | None:
    """Shortest index sequence (1-based) of length at most ``max_len`` solving ``inst``.

    Breadth-first search over the unmatched overhang ``(side, suffix)``.
    Raises :class:`SearchExhausted` when more than ``state_cap`` states are
    visited, which is distinct from returning ``None``.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    start = (0, "")
    parent: dict[tuple[int, str], tuple[tuple[int, str], int] | None] = {start: None}
    frontier = deque([start])
    for _ in range(max_len):
        nxt: deque = deque()
        while frontier:
            state = frontier.popleft()
            for idx, (u, v) in enumerate(inst.pairs, start=1):
                new = _extend(state, u, v)
                if new is None:
                    continue
                if new == (0, ""):
                    path = [idx]
                    cur = state
                    while parent[cur] is not None:
                        cur, i = parent[cur]
                        path.append(i)
                    return path[::-1]
                if new in parent:
                    continue
                parent[new] = (state, idx)
                if len(parent) > state_cap:
                    raise SearchExhausted(f"more than {state_cap} states visited")
                nxt.append(new)
        frontier = nxt
    return None


def _extend(state: tuple[int, str], u: str, v: str) -> tuple[int, str] | None:
    # side 0: top string is ahead by `rest`; side 1: bottom is ahead
    side, rest = state
    top, bottom = (rest + u, v) if side == 0 else (u, rest + v)
    m = min(len(top), len(bottom))
    if top[:m] != bottom[:m]:
        return None
    if len(top) >= len(bottom):
        return (0, top[m:])
    return (1, bottom[m:])


def search_solution_brute(inst: PcpInstance, max_len: int) -> list[int] | None:
    """Try every index sequence in order of length; exponential, for tests."""
    for m in range(1, max_len + 1):
        for seq in itertools.product(range(len(inst.pairs)), repeat=m):
            top = "".join(inst.pairs[i][0] for i in seq)
            bottom = "".join(inst.pairs[i][1] for i in seq)
            if top == bottom:
                return [i + 1 for i in seq]
    return None


# --------------------------------------------------------------------------
# counting


def words_up_to(n: int, k: int) -> int:
    """Number of nonempty words of length at most ``n``."""
    return sum(k**ell for ell in range(1, n + 1))


@dataclass(frozen=True)
class SphereCount:
    n: int
    k: int
    direct: int
    closed_formula: int

    @property
    def agrees(self) -> bool:
        return self.direct == self.closed_formula


def sphere_count(n: int, k: int) -> SphereCount:
    """``direct`` counts nonempty words; ``closed_formula`` also counts the empty word."""
    if n < 1 or k < 2:
        raise ValueError("need n >= 1 and k >= 2")
    return SphereCount(n, k, words_up_to(n, k) ** (2 * n), (1 + words_up_to(n, k)) ** (2 * n))


def prefix_pair_bound(n: int, k: int) -> Fraction:
    """Upper bound ``2n(n+1) / (1 + k + ... + k^n)`` on the prefix-pair frequency."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return Fraction(2 * n * (n + 1), 1 + words_up_to(n, k))


def prefix_word_pairs(n: int, k: int) -> int:
    """Ordered pairs of words of length 1..n in which one is a prefix of the other."""
    # v of length m has m nonempty prefixes; count both orders, equal pairs once
    one_way = sum(m * k**m for m in range(1, n + 1))
    return 2 * one_way - words_up_to(n, k)


def prefix_word_pairs_brute(n: int, k: int) -> int:
    words = list(iter_words(n, k))
    return sum(_prefix_related(u, v) for u in words for v in words)


def single_pair_prefix_probability(n: int, k: int) -> Fraction:
    return Fraction(prefix_word_pairs(n, k), words_up_to(n, k) ** 2)


def no_prefix_sphere_hits(n: int, k: int) -> int:
    """Exact number of sphere-``n`` instances with no prefix pair."""
    w = words_up_to(n, k)
    return (w * w - prefix_word_pairs(n, k)) ** n


def iter_words(n: int, k: int) -> Iterator[str]:
    letters = DIGITS[:k]
    for ell in range(1, n + 1):
        for t in itertools.product(letters, repeat=ell):
            yield "".join(t)


def enumerate_sphere(n: int, k: int, cap: int = DEFAULT_ENUM_CAP) -> Iterator[PcpInstance]:
    total = sphere_count(n, k).direct
    if total > cap:
        raise CapExceeded(f"{total} instances at n={n}, k={k} exceed cap {cap}")
    words = list(iter_words(n, k))
    for flat in itertools.product(words, repeat=2 * n):
        yield PcpInstance(k, tuple(zip(flat[0::2], flat[1::2])))


def _word_offsets(n: int, k: int) -> list[int]:
    # offsets[ell-1] = number of words shorter than ell
    offsets, acc = [], 0
    for ell in range(1, n + 1):
        offsets.append(acc)
        acc += k**ell
    return offsets


def _word_from_rank(rank: int, n: int, k: int) -> str:
    for ell in range(1, n + 1):
        if rank < k**ell:
            digits = []
            for _ in range(ell):
                rank, d = divmod(rank, k)
                digits.append(DIGITS[d])
            return "".join(reversed(digits))
        rank -= k**ell
    raise ValueError("rank out of range")


def sample_sphere(n: int, k: int, rng: np.random.Generator) -> PcpInstance:
    """Uniform instance on sphere ``n``.

    Each word is a uniform rank among the ``k + ... + k^n`` nonempty words,
    which draws its length with probability proportional to ``k^length``.
    """
    w = words_up_to(n, k)
    if w <= 2**62:
        ranks = [int(r) for r in rng.integers(0, w, size=2 * n)]
    else:
        ranks = [uniform_below(rng, w) for _ in range(2 * n)]
    words = [_word_from_rank(r, n, k) for r in ranks]
    return PcpInstance(k, tuple(zip(words[0::2], words[1::2])))


def domain(k: int = 2, enum_cap: int = DEFAULT_ENUM_CAP) -> SizedDomain:
    return SizedDomain(
        name=f"pcp-k{k}",
        size_of=lambda inst: inst.size,
        sphere_count=lambda n: sphere_count(n, k).direct if n >= 1 else 0,
        enumerate_sphere=lambda n: enumerate_sphere(n, k, enum_cap),
        sample_sphere=lambda n, rng: sample_sphere(n, k, rng),
        min_size=1,
        enum_cap=enum_cap,
    )


def no_prefix_predicate(k: int = 2) -> CountedPredicate:
    return CountedPredicate(lambda inst: not has_prefix_pair(inst), "no-prefix-pair",
                            lambda n: no_prefix_sphere_hits(n, k) if n >= 1 else 0)


def prefix_predicate(k: int = 2) -> CountedPredicate:
    return CountedPredicate(has_prefix_pair, "prefix-pair",
                            lambda n: sphere_count(n, k).direct - no_prefix_sphere_hits(n, k) if n >= 1 else 0)


def mc_prefix_frequency(n: int, k: int, trials: int, rng) -> FrequencyPoint:
    """Monte Carlo prefix-pair frequency on sphere ``n``, vectorised.

    Consumes the generator exactly like ``trials`` successive calls of
    :func:`sample_sphere`, so both routes see the same instances.
    """
    gen = as_generator(rng)
    w = words_up_to(n, k)
    if k**n >= 2**62:
        raise ValueError("vectorised sampler needs k^n < 2^62")
    offsets = np.array(_word_offsets(n, k) + [w], dtype=np.int64)
    powers = np.array([k**d for d in range(n)], dtype=np.int64)
    hits = 0
    done = 0
    while done < trials:
        m = min(_MC_CHUNK, trials - done)
        ranks = gen.integers(0, w, size=(m, 2 * n))
        lengths = np.searchsorted(offsets, ranks, side="right")
        values = ranks - offsets[lengths - 1]
        lu, lv = lengths[:, 0::2], lengths[:, 1::2]
        xu, xv = values[:, 0::2], values[:, 1::2]
        short_len = np.minimum(lu, lv)
        # a word is a prefix of the other iff the longer one, cut to the
        # shorter length, has the same value
        cut_u = xu // powers[lu - short_len]
        cut_v = xv // powers[lv - short_len]
        related = (cut_u == cut_v).any(axis=1)
        hits += int(related.sum())
        done += m
    return FrequencyPoint.sampled(n, hits, trials)
