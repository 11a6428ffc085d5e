"""3-CNF instances as words of the language (R^)*, and counting them.

The alphabet has seven symbols ``0 1 v ' [ ] ^``; ``v`` and ``^`` are the
ASCII spellings of disjunction and conjunction (``∨`` and ``∧`` are accepted
on input).  A clause is ``[x v y v z]`` where each variable is a binary
numeral starting with 1, optionally followed by ``'`` for negation; every
clause, including the last, is followed by ``^``.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .density import (
    Answer,
    CapExceeded,
    EmptySphereError,
    FrequencyPoint,
    FrequencySeries,
    GenericityError,
    Geometry,
    PartialVerdict,
)

ALPHABET = ("0", "1", "v", "'", "[", "]", "^")
_ALIASES = {"∨": "v", "∧": "^"}
_SYMBOL_INDEX = {s: i for i, s in enumerate(ALPHABET)}
CLAUSE_PATTERN = r"\[1[01]*'?v1[01]*'?v1[01]*'?\]"
INSTANCE_RE = re.compile(rf"(?:{CLAUSE_PATTERN}\^)*")
DEFAULT_VAR_CAP = 20
DEFAULT_LENGTH_BUDGET = 4096


class CnfParseError(ValueError):
    def __init__(self, position: int, message: str):
        super().__init__(f"position {position}: {message}")
        self.position = position


class ConvergenceError(GenericityError):
    def __init__(self, message: str, last: float, previous: float):
        super().__init__(f"{message} (last estimates {previous!r}, {last!r})")
        self.last = last
        self.previous = previous


@dataclass(frozen=True)
class Literal:
    var: str
    negated: bool = False

    def __post_init__(self):
        if not re.fullmatch(r"1[01]*", self.var):
            raise ValueError(f"variable {self.var!r} is not a binary numeral starting with 1")

    def render(self) -> str:
        return self.var + ("'" if self.negated else "")


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, Literal, Literal]

    def __post_init__(self):
        if len(self.literals) != 3:
            raise ValueError("a clause has exactly three literals")

    @classmethod
    def of(cls, *lits: tuple[str, bool]) -> Clause:
        return cls(tuple(Literal(v, neg) for v, neg in lits))

    def render(self) -> str:
        return "[" + "v".join(lit.render() for lit in self.literals) + "]"


@dataclass(frozen=True)
class Cnf3Instance:
    clauses: tuple[Clause, ...] = ()

    def render(self, unicode: bool = False) -> str:
        text = "".join(c.render() + "^" for c in self.clauses)
        if unicode:
            text = text.replace("v", "∨").replace("^", "∧")
        return text

    @property
    def size(self) -> int:
        return len(self.render())

    def variables(self) -> list[str]:
        return sorted({lit.var for c in self.clauses for lit in c.literals}, key=lambda v: int(v, 2))


CORE_VARIABLES = ("1", "10", "11")
CORE_CLAUSES: tuple[Clause, ...] = tuple(
    Clause.of(*zip(CORE_VARIABLES, signs)) for signs in itertools.product((False, True), repeat=3)
)


def normalize(text: str) -> str:
    for k, v in _ALIASES.items():
        text = text.replace(k, v)
    return text


def parse_instance(text: str) -> Cnf3Instance:
    """Parse a word of (R^)*; errors carry the offending symbol position."""
    s = normalize(text)
    pos = 0
    clauses = []

    def expect(ch: str) -> None:
        nonlocal pos
        if pos >= len(s) or s[pos] != ch:
            found = repr(s[pos]) if pos < len(s) else "end of input"
            raise CnfParseError(pos, f"expected {ch!r}, found {found}")
        pos += 1

    while pos < len(s):
        expect("[")
        lits = []
        for j, sep in enumerate(("v", "v", "]")):
            start = pos
            expect("1")
            while pos < len(s) and s[pos] in "01":
                pos += 1
            var = s[start:pos]
            neg = pos < len(s) and s[pos] == "'"
            if neg:
                pos += 1
            lits.append(Literal(var, neg))
            expect(sep)
        expect("^")
        clauses.append(Clause(tuple(lits)))
    return Cnf3Instance(tuple(clauses))


def algorithm_three(inst: Cnf3Instance) -> PartialVerdict:
    """No if all eight core clauses occur as clause tokens, DontKnow otherwise."""
    fuel = max(1, inst.size)
    seen = set()
    steps = 0
    for c in inst.clauses:
        steps += len(c.render()) + 1
        if c in _CORE_SET:
            seen.add(c)
            if len(seen) == len(CORE_CLAUSES):
                return PartialVerdict(Answer.NO, steps, fuel)
    return PartialVerdict(Answer.DONT_KNOW, steps, fuel)


_CORE_SET = frozenset(CORE_CLAUSES)


def brute_force_sat(inst: Cnf3Instance, var_cap: int = DEFAULT_VAR_CAP) -> bool:
    variables = inst.variables()
    if len(variables) > var_cap:
        raise CapExceeded(f"{len(variables)} variables exceed cap {var_cap}")
    index = {v: i for i, v in enumerate(variables)}
    clauses = [[(index[lit.var], lit.negated) for lit in c.literals] for c in inst.clauses]
    for bits in itertools.product((False, True), repeat=len(variables)):
        if all(any(bits[i] != neg for i, neg in c) for c in clauses):
            return True
    return False


# --------------------------------------------------------------------------
# automata

# grammar states of (R^)*: S between clauses, A_j before variable j, V_j inside
# variable j, N_j after its negation mark, C after the closing bracket
_GRAMMAR: dict[str, dict[str, str]] = {
    "S": {"[": "A1"},
    "A1": {"1": "V1"},
    "V1": {"0": "V1", "1": "V1", "'": "N1", "v": "A2"},
    "N1": {"v": "A2"},
    "A2": {"1": "V2"},
    "V2": {"0": "V2", "1": "V2", "'": "N2", "v": "A3"},
    "N2": {"v": "A3"},
    "A3": {"1": "V3"},
    "V3": {"0": "V3", "1": "V3", "'": "N3", "]": "C"},
    "N3": {"]": "C"},
    "C": {"^": "S"},
}
DEAD = "dead"


@dataclass(frozen=True, eq=False)
class CountingDfa:
    """A complete DFA over :data:`ALPHABET` with state 0 as the start.

    ``labels`` optionally tags accepting states (e.g. with the set of core
    clauses seen) so counts can be split by tag.
    """

    states: tuple
    delta: tuple[tuple[int, ...], ...]
    accepting: frozenset[int]
    dead: int
    labels: tuple = ()

    @property
    def alphabet(self) -> tuple[str, ...]:
        return ALPHABET

    def transfer_matrix(self) -> np.ndarray:
        m = np.zeros((len(self.states), len(self.states)), dtype=np.int64)
        for i, row in enumerate(self.delta):
            for j in row:
                m[i, j] += 1
        return m

    def run(self, word: str) -> int:
        q = 0
        for ch in normalize(word):
            idx = _SYMBOL_INDEX.get(ch)
            if idx is None:
                return self.dead
            q = self.delta[q][idx]
        return q

    def accepts(self, word: str) -> bool:
        return self.run(word) in self.accepting

    def trim(self) -> list[int]:
        """States reachable from the start and co-reachable to acceptance."""
        reach = {0}
        stack = [0]
        while stack:
            q = stack.pop()
            for r in self.delta[q]:
                if r not in reach:
                    reach.add(r)
                    stack.append(r)
        rev: dict[int, set[int]] = {}
        for q, row in enumerate(self.delta):
            for r in row:
                rev.setdefault(r, set()).add(q)
        coreach = set(self.accepting)
        stack = list(self.accepting)
        while stack:
            q = stack.pop()
            for p in rev.get(q, ()):
                if p not in coreach:
                    coreach.add(p)
                    stack.append(p)
        return sorted(reach & coreach)

    def to_json(self) -> str:
        edges = [
            {"from": i, "symbol": ALPHABET[a], "to": j}
            for i, row in enumerate(self.delta)
            for a, j in enumerate(row)
            if j != self.dead
        ]
        return json.dumps({
            "states": [repr(s) for s in self.states],
            "alphabet": list(ALPHABET),
            "start": 0,
            "dead": self.dead,
            "accepting": sorted(self.accepting),
            "edges": edges,
        })


def _explore(start, step: Callable, accept: Callable, label: Callable | None = None) -> CountingDfa:
    index = {start: 0}
    states = [start]
    delta = []
    i = 0
    while i < len(states):
        q = states[i]
        row = []
        for sym in ALPHABET:
            r = step(q, sym)
            if r not in index:
                index[r] = len(states)
                states.append(r)
            row.append(index[r])
        delta.append(tuple(row))
        i += 1
    if DEAD not in index:
        index[DEAD] = len(states)
        states.append(DEAD)
        delta.append(tuple([index[DEAD]] * len(ALPHABET)))
    accepting = frozenset(i for i, q in enumerate(states) if q != DEAD and accept(q))
    labels = tuple(label(q) if q != DEAD and label else None for q in states) if label else ()
    return CountingDfa(tuple(states), tuple(delta), accepting, index[DEAD], labels)


def _token_step(token: str | None, sym: str, prefixes: frozenset[str]) -> str | None:
    if token is None:
        return None
    t = token + sym
    return t if t in prefixes else None


def _prefixes(patterns: Iterable[str]) -> frozenset[str]:
    return frozenset(p[:i] for p in patterns for i in range(1, len(p) + 1))


def build_counting_dfa(
    required_absent: Iterable[Clause] = (), patterns: Sequence[Clause] = CORE_CLAUSES
) -> CountingDfa:
    """DFA for the words of (R^)* containing none of ``required_absent`` as a clause.

    The current clause is tracked letter by letter only while it is still a
    prefix of some forbidden clause.
    """
    forbidden = frozenset(required_absent)
    if not forbidden <= frozenset(patterns):
        raise ValueError("required_absent must be drawn from the configured pattern set")
    texts = frozenset(c.render() for c in forbidden)
    prefixes = _prefixes(texts)

    def step(q, sym):
        if q == DEAD:
            return DEAD
        g, token = q
        nxt = _GRAMMAR[g].get(sym)
        if nxt is None:
            return DEAD
        if g == "S":
            return (nxt, "[" if "[" in prefixes else None)
        if g == "C":
            return DEAD if token in texts else ("S", None)
        return (nxt, _token_step(token, sym, prefixes))

    return _explore(("S", None), step, lambda q: q[0] == "S")


def build_mask_dfa(patterns: Sequence[Clause] = CORE_CLAUSES) -> CountingDfa:
    """DFA for (R^)* whose accepting states are labelled by the bitmask of
    patterns seen so far."""
    texts = [c.render() for c in patterns]
    bit = {t: 1 << i for i, t in enumerate(texts)}
    prefixes = _prefixes(texts)

    def step(q, sym):
        if q == DEAD:
            return DEAD
        g, token, mask = q
        nxt = _GRAMMAR[g].get(sym)
        if nxt is None:
            return DEAD
        if g == "S":
            return (nxt, "[" if "[" in prefixes else None, mask)
        if g == "C":
            return ("S", None, mask | bit.get(token, 0))
        return (nxt, _token_step(token, sym, prefixes), mask)

    return _explore(("S", None, 0), step, lambda q: q[0] == "S", lambda q: q[2])


# --------------------------------------------------------------------------
# counting


def _edges(dfa: CountingDfa) -> list[tuple[int, int]]:
    return [(i, j) for i, row in enumerate(dfa.delta) for j in row if j != dfa.dead and i != dfa.dead]


def state_counts(dfa: CountingDfa, max_length: int) -> list[list[int]]:
    """``out[L][q]`` = number of words of length ``L`` leading from the start to ``q``."""
    if max_length < 0:
        raise ValueError("length must be nonnegative")
    edges = _edges(dfa)
    cur = [0] * len(dfa.states)
    cur[0] = 1
    out = [cur]
    for _ in range(max_length):
        nxt = [0] * len(cur)
        for i, j in edges:
            c = cur[i]
            if c:
                nxt[j] += c
        out.append(nxt)
        cur = nxt
    return out


def count_series(dfa: CountingDfa, max_length: int) -> list[int]:
    return [sum(row[q] for q in dfa.accepting) for row in state_counts(dfa, max_length)]


def word_count(dfa: CountingDfa, length: int) -> int:
    """Exact number of accepted words with exactly ``length`` symbols."""
    return count_series(dfa, length)[length]


def enumerate_accepted(dfa: CountingDfa, length: int) -> list[str]:
    """All accepted words of the given length, by depth-first walk of the DFA."""
    live = set(dfa.trim())
    words: list[str] = []

    def walk(q: int, prefix: list[str], remaining: int) -> None:
        if remaining == 0:
            if q in dfa.accepting:
                words.append("".join(prefix))
            return
        for a, r in enumerate(dfa.delta[q]):
            if r in live:
                prefix.append(ALPHABET[a])
                walk(r, prefix, remaining - 1)
                prefix.pop()

    if 0 in live:
        walk(0, [], length)
    return words


# --------------------------------------------------------------------------
# growth rate


@dataclass(frozen=True)
class GrowthRate:
    value: float
    iterations: int
    previous: float


def growth_rate(dfa: CountingDfa, iterations: int = 200_000, tol: float = 1e-10) -> GrowthRate:
    """Dominant eigenvalue of the trimmed transfer matrix by power iteration.

    Starts from the all-ones vector and stops when successive Rayleigh
    quotients differ by less than ``tol``.
    """
    if iterations < 1 or tol <= 0:
        raise ValueError("need iterations >= 1 and tol > 0")
    keep = dfa.trim()
    if not keep:
        return GrowthRate(0.0, 0, 0.0)
    a = dfa.transfer_matrix()[np.ix_(keep, keep)].astype(float)
    return power_iteration(a, iterations, tol)


def power_iteration(a: np.ndarray, iterations: int = 200_000, tol: float = 1e-10) -> GrowthRate:
    x = np.ones(a.shape[0]) / np.sqrt(a.shape[0])
    lam_prev = float("nan")
    lam = float(x @ (a @ x))
    for it in range(1, iterations + 1):
        y = a @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            return GrowthRate(0.0, it, lam)
        x = y / norm
        lam_prev, lam = lam, float(x @ (a @ x))
        if abs(lam - lam_prev) < tol:
            return GrowthRate(lam, it, lam_prev)
    raise ConvergenceError(f"no convergence in {iterations} iterations", lam, lam_prev)


# --------------------------------------------------------------------------
# density of the instances Algorithm 3 answers


def _lengths_ok(lengths: Sequence[int], budget: int) -> list[int]:
    lengths = list(lengths)
    if any(a >= b for a, b in zip(lengths, lengths[1:])):
        raise ValueError("lengths must be strictly increasing")
    if lengths and (lengths[0] < 0 or lengths[-1] > budget):
        raise CapExceeded(f"lengths must lie in [0, {budget}]")
    return lengths


@lru_cache(maxsize=4)
def _mask_dfa() -> CountingDfa:
    return build_mask_dfa(CORE_CLAUSES)


def all_eight_counts(lengths: Sequence[int], budget: int = DEFAULT_LENGTH_BUDGET) -> dict[int, tuple[int, int]]:
    """``{L: (words containing every core clause, all words)}`` via the mask DFA."""
    lengths = _lengths_ok(lengths, budget)
    dfa = _mask_dfa()
    full = (1 << len(CORE_CLAUSES)) - 1
    rows = state_counts(dfa, lengths[-1] if lengths else 0)
    out = {}
    for L in lengths:
        row = rows[L]
        total = sum(row[q] for q in dfa.accepting)
        hits = sum(row[q] for q in dfa.accepting if dfa.labels[q] == full)
        out[L] = (hits, total)
    return out


def all_eight_counts_inclusion_exclusion(
    lengths: Sequence[int], budget: int = DEFAULT_LENGTH_BUDGET
) -> dict[int, tuple[int, int]]:
    """Same counts as :func:`all_eight_counts` by inclusion-exclusion over omit-DFAs."""
    lengths = _lengths_ok(lengths, budget)
    top = lengths[-1] if lengths else 0
    total = count_series(build_counting_dfa(()), top)
    missing = [0] * (top + 1)
    for r in range(1, len(CORE_CLAUSES) + 1):
        sign = 1 if r % 2 else -1
        for subset in itertools.combinations(CORE_CLAUSES, r):
            series = count_series(build_counting_dfa(subset), top)
            for L in range(top + 1):
                missing[L] += sign * series[L]
    return {L: (total[L] - missing[L], total[L]) for L in lengths}


def all_eight_density_series(
    lengths: Sequence[int], method: str = "mask", budget: int = DEFAULT_LENGTH_BUDGET
) -> FrequencySeries:
    """Exact frequency, among words of each length, of instances containing
    all eight core clauses (where Algorithm 3 answers)."""
    if method == "mask":
        counts = all_eight_counts(lengths, budget)
    elif method == "inclusion-exclusion":
        counts = all_eight_counts_inclusion_exclusion(lengths, budget)
    else:
        raise ValueError(f"unknown method {method!r}")
    points = []
    for L in lengths:
        hits, total = counts[L]
        if total == 0:
            raise EmptySphereError(f"no instances of length {L}")
        points.append(FrequencyPoint.exact(L, hits, total))
    return FrequencySeries(Geometry.SPHERE, tuple(points), "contains-all-eight-core-clauses")


def clause_length_generating_counts(max_length: int, omit: Iterable[Clause] = ()) -> list[int]:
    """Counts of (R^)*-words by length from the clause-length generating function.

    Independent of the automata: a word is a free sequence of clause tokens,
    so ``count[L] = sum over token lengths t of tokens[t] * count[L - t]``.
    """
    tokens = [0] * (max_length + 1)
    # token = '[' a (') 'v' b (') 'v' c (') ']' '^' with variable lengths a, b, c >= 1
    for a in range(1, max_length):
        for b in range(1, max_length):
            for c in range(1, max_length):
                base = a + b + c + 5
                if base > max_length:
                    break
                nvars = 2 ** (a - 1) * 2 ** (b - 1) * 2 ** (c - 1)
                for negs in range(4):
                    t = base + negs
                    if t <= max_length:
                        tokens[t] += nvars * _comb3(negs)
    for c in omit:
        t = len(c.render()) + 1
        if t <= max_length:
            tokens[t] -= 1
    count = [0] * (max_length + 1)
    count[0] = 1
    for L in range(1, max_length + 1):
        count[L] = sum(tokens[t] * count[L - t] for t in range(1, L + 1) if tokens[t])
    return count


def _comb3(r: int) -> int:
    return (1, 3, 3, 1)[r]


def is_instance_text(word: str) -> bool:
    return INSTANCE_RE.fullmatch(normalize(word)) is not None
