"""Turing machines with a semi-infinite tape over the alphabet {a0, a1}.

A program with ``n`` non-halting states is a total map

    (state in 1..n, symbol in {a0, a1}) -> (state in 0..n, symbol, L|R)

stored as ``2n`` integer codes.  Entry ``2*(i-1) + r`` holds the target of
``(i, a_r)`` encoded as ``4*state + 2*symbol + direction`` with ``L = 0`` and
``R = 1``.  State 1 is initial and state 0 halts.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator

import numpy as np

from .density import (
    Answer,
    CapExceeded,
    CountedPredicate,
    PartialVerdict,
    SizedDomain,
)

LEFT, RIGHT = 0, 1
_DIRS = "LR"
DEFAULT_ENUM_CAP = 10**7


class ProgramFormatError(ValueError):
    pass


def encode(state: int, symbol: int, direction: int) -> int:
    return 4 * state + 2 * symbol + direction


def decode(code: int) -> tuple[int, int, int]:
    return code >> 2, (code >> 1) & 1, code & 1


@dataclass(frozen=True, eq=False)
class TmProgram:
    n: int
    codes: np.ndarray

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        if self.n < 1:
            raise ValueError("a program needs at least one non-halting state")
        if codes.shape != (2 * self.n,):
            raise ValueError(f"expected {2 * self.n} table entries, got {codes.shape}")
        if codes.size and (codes.min() < 0 or codes.max() >= 4 * (self.n + 1)):
            raise ValueError("table target out of range")
        codes = codes.copy()
        codes.flags.writeable = False
        object.__setattr__(self, "codes", codes)

    @classmethod
    def from_table(cls, n: int, table: dict[tuple[int, int], tuple[int, int, str]]) -> TmProgram:
        """Build from ``{(state, symbol): (state', symbol', 'L'|'R')}``."""
        codes = []
        for i in range(1, n + 1):
            for r in (0, 1):
                j, s, d = table[(i, r)]
                codes.append(encode(j, s, _DIRS.index(d)))
        return cls(n, np.array(codes))

    def entry(self, state: int, symbol: int) -> tuple[int, int, str]:
        j, s, d = decode(int(self.codes[2 * (state - 1) + symbol]))
        return j, s, _DIRS[d]

    def __eq__(self, other):
        return isinstance(other, TmProgram) and self.n == other.n and np.array_equal(self.codes, other.codes)

    def __hash__(self):
        return hash((self.n, self.codes.tobytes()))

    def __repr__(self):
        return f"TmProgram(n={self.n}, codes={self.codes.tolist()})"

    # text and JSON formats

    def to_text(self) -> str:
        lines = [str(self.n)]
        for i in range(1, self.n + 1):
            for r in (0, 1):
                j, s, d = self.entry(i, r)
                lines.append(f"{i} a{r} -> {j} a{s} {d}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> TmProgram:
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise ProgramFormatError("empty program text")
        try:
            n = int(lines[0])
        except ValueError:
            raise ProgramFormatError(f"line 1: expected state count, got {lines[0]!r}") from None
        if len(lines) != 2 * n + 1:
            raise ProgramFormatError(f"expected {2 * n} instruction lines, got {len(lines) - 1}")
        codes = []
        expected = [(i, r) for i in range(1, n + 1) for r in (0, 1)]
        for lineno, (line, (i, r)) in enumerate(zip(lines[1:], expected), start=2):
            parts = line.split()
            if len(parts) != 6 or parts[2] != "->":
                raise ProgramFormatError(f"line {lineno}: malformed instruction {line!r}")
            try:
                src, sym = int(parts[0]), _symbol(parts[1])
                dst, wsym = int(parts[3]), _symbol(parts[4])
            except ValueError:
                raise ProgramFormatError(f"line {lineno}: malformed instruction {line!r}") from None
            if (src, sym) != (i, r):
                raise ProgramFormatError(f"line {lineno}: expected entry for state {i} a{r}")
            if parts[5] not in _DIRS or not 0 <= dst <= n:
                raise ProgramFormatError(f"line {lineno}: bad target {line!r}")
            codes.append(encode(dst, wsym, _DIRS.index(parts[5])))
        return cls(n, np.array(codes))

    def to_json(self) -> str:
        rows = []
        for i in range(1, self.n + 1):
            for r in (0, 1):
                j, s, d = self.entry(i, r)
                rows.append({"state": i, "symbol": f"a{r}", "next": j, "write": f"a{s}", "move": d})
        return json.dumps({"n": self.n, "table": rows})

    @classmethod
    def from_json(cls, text: str) -> TmProgram:
        data = json.loads(text)
        table = {
            (row["state"], _symbol(row["symbol"])): (row["next"], _symbol(row["write"]), row["move"])
            for row in data["table"]
        }
        return cls.from_table(data["n"], table)


def _symbol(token: str) -> int:
    if token not in ("a0", "a1"):
        raise ValueError(token)
    return int(token[1])


class RunKind(str, Enum):
    HALTED = "Halted"
    CRASHED = "Crashed"
    STATE_REPEATED = "StateRepeated"
    FUEL_EXHAUSTED = "FuelExhausted"


@dataclass(frozen=True)
class RunOutcome:
    kind: RunKind
    steps: int
    visited_states: frozenset[int]


def simulate(p: TmProgram, fuel: int, stop_on_repeat: bool = True) -> RunOutcome:
    """Run ``p`` from state 1 on a blank tape, head on the leftmost square.

    Stops at the first halt, crash, re-entry of an already visited
    non-halting state (unless ``stop_on_repeat`` is false) or after ``fuel``
    steps.  A left move from square 0 consumes a step and leaves the tape
    untouched.
    """
    if fuel < 1:
        raise ValueError("fuel must be at least 1")
    codes = p.codes
    tape = bytearray(1)
    head, state, steps = 0, 1, 0
    visited = {1}
    while steps < fuel:
        code = int(codes[2 * (state - 1) + tape[head]])
        steps += 1
        nxt, write, move = code >> 2, (code >> 1) & 1, code & 1
        if move == LEFT:
            if head == 0:
                return RunOutcome(RunKind.CRASHED, steps, frozenset(visited))
            tape[head] = write
            head -= 1
        else:
            tape[head] = write
            head += 1
            if head == len(tape):
                tape.append(0)
        if nxt == 0:
            visited.add(0)
            return RunOutcome(RunKind.HALTED, steps, frozenset(visited))
        if nxt in visited and stop_on_repeat:
            return RunOutcome(RunKind.STATE_REPEATED, steps, frozenset(visited))
        visited.add(nxt)
        state = nxt
    return RunOutcome(RunKind.FUEL_EXHAUSTED, steps, frozenset(visited))


def algorithm_one(p: TmProgram) -> PartialVerdict:
    """Yes if ``p`` halts before repeating a state, No if it crashes first."""
    # without a repeated state at most n+1 transitions are possible
    fuel = p.n + 2
    out = simulate(p, fuel)
    if out.kind is RunKind.HALTED:
        return PartialVerdict(Answer.YES, out.steps, fuel)
    if out.kind is RunKind.CRASHED:
        return PartialVerdict(Answer.NO, out.steps, fuel)
    return PartialVerdict(Answer.DONT_KNOW, out.steps, fuel)


# --------------------------------------------------------------------------
# spheres


@dataclass(frozen=True)
class SphereCount:
    n: int
    direct: int
    closed_formula: int

    @property
    def agrees(self) -> bool:
        return self.direct == self.closed_formula


def sphere_count(n: int) -> SphereCount:
    """Number of programs with ``n`` non-halting states.

    ``direct`` counts total maps with ``4(n+1)`` choices per entry;
    ``closed_formula`` carries the alternative ``(4n)^(2n)`` form for comparison.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    return SphereCount(n, (4 * (n + 1)) ** (2 * n), (4 * n) ** (2 * n))


def enumerate_sphere(n: int, cap: int = DEFAULT_ENUM_CAP) -> Iterator[TmProgram]:
    """Every program with ``n`` states, lexicographic in the table codes."""
    total = sphere_count(n).direct
    if total > cap:
        raise CapExceeded(f"{total} programs with n={n} exceed cap {cap}")
    targets = range(4 * (n + 1))
    for codes in itertools.product(targets, repeat=2 * n):
        yield TmProgram(n, np.array(codes))


def sample_sphere(n: int, rng: np.random.Generator) -> TmProgram:
    """Uniform program with ``n`` states: every entry drawn independently."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return TmProgram(n, rng.integers(0, 4 * (n + 1), size=2 * n))


def domain(enum_cap: int = DEFAULT_ENUM_CAP) -> SizedDomain:
    return SizedDomain(
        name="turing",
        size_of=lambda p: p.n,
        sphere_count=lambda n: sphere_count(n).direct if n >= 1 else 0,
        enumerate_sphere=lambda n: enumerate_sphere(n, enum_cap),
        sample_sphere=sample_sphere,
        min_size=1,
        enum_cap=enum_cap,
    )


def _decided(p: TmProgram) -> bool:
    return algorithm_one(p).halted


decided = CountedPredicate(_decided, "halts-or-crashes-before-repeat")


# --------------------------------------------------------------------------
# first step and random walks


def first_step_survival(n: int) -> Fraction:
    """Share of programs that neither halt nor repeat a state on step 1."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return Fraction(1, 2) + Fraction(1, 2) * Fraction(n - 1, n + 1)


def survives_first_step(p: TmProgram) -> bool:
    # crashing counts as surviving: the program neither halted nor repeated
    return simulate(p, 1).kind in (RunKind.CRASHED, RunKind.FUEL_EXHAUSTED)


first_step = CountedPredicate(survives_first_step, "no-halt-no-repeat-at-step-1")


def first_step_survival_enumerated(n: int, cap: int = DEFAULT_ENUM_CAP) -> Fraction:
    hits = total = 0
    for p in enumerate_sphere(n, cap):
        total += 1
        hits += survives_first_step(p)
    return Fraction(hits, total)


def nonneg_walk_fraction(k: int) -> Fraction:
    """Fraction of the ``2^k`` simple walks from 0 that never go negative."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return Fraction(math.comb(k, k // 2), 2**k)


def nonneg_walk_fraction_brute(k: int) -> Fraction:
    """Enumerate all ``2^k`` step sequences; bit ``i`` set means step ``i`` is +1."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return Fraction(1)
    walks = np.arange(2**k, dtype=np.int64)
    pos = np.zeros(2**k, dtype=np.int64)
    ok = np.ones(2**k, dtype=bool)
    for i in range(k):
        pos += 2 * ((walks >> i) & 1) - 1
        ok &= pos >= 0
    return Fraction(int(ok.sum()), 2**k)
