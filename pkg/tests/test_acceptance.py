"""Acceptance battery: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from genericity import avgcase, pcp, threesat, turing
from genericity.density import Answer, Geometry, Mode, frequency, frequency_series, spherical_vs_volume, substream
from genericity.experiments import EXPERIMENTS, run

RESULTS: dict[int, str] = {}
SEED = 20240607


def oracle_run(p: turing.TmProgram, fuel: int) -> str:
    """Plain semi-infinite tape simulation without repeat detection."""
    tape: dict[int, int] = {}
    head, state = 0, 1
    for _ in range(fuel):
        nxt, write, d = p.entry(state, tape.get(head, 0))
        if d == "L" and head == 0:
            return "Crashed"
        tape[head] = write
        head += 1 if d == "R" else -1
        if nxt == 0:
            return "Halted"
        state = nxt
    return "Running"


def oracle_verdict(p: turing.TmProgram) -> Answer:
    """Algorithm 1 from scratch: run until halt, crash or a repeated state."""
    tape: dict[int, int] = {}
    head, state, seen = 0, 1, {1}
    while True:
        nxt, write, d = p.entry(state, tape.get(head, 0))
        if d == "L" and head == 0:
            return Answer.NO
        tape[head] = write
        head += 1 if d == "R" else -1
        if nxt == 0:
            return Answer.YES
        if nxt in seen:
            return Answer.DONT_KNOW
        seen.add(nxt)
        state = nxt


def record(number: int, title: str, ok: bool, elapsed: float, limit: float | None, detail: str) -> None:
    in_time = limit is None or elapsed < limit
    budget = f" (limit {limit:g}s)" if limit is not None else ""
    status = "PASS" if ok and in_time else "FAIL"
    line = f"{status} criterion {number:>2} {title}: {detail}; {elapsed:.2f}s{budget}"
    RESULTS[number] = line
    print(line)
    assert ok, line
    assert in_time, line


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# --------------------------------------------------------------------------


def criterion_1():
    def body():
        tally = Counter(turing.algorithm_one(p).answer for p in turing.enumerate_sphere(1))
        oracle = Counter(oracle_verdict(p) for p in turing.enumerate_sphere(1))
        delta = frequency(turing.domain(), turing.decided, 1).estimate
        return tally, oracle, delta

    (tally, oracle, delta), dt = timed(body)
    want = {Answer.YES: 16, Answer.NO: 32, Answer.DONT_KNOW: 16}
    ok = tally == want and oracle == want and delta == Fraction(3, 4)
    detail = f"Yes={tally[Answer.YES]} No={tally[Answer.NO]} DontKnow={tally[Answer.DONT_KNOW]} delta={delta}"
    record(1, "halting exact n=1", ok, dt, 1.0, detail)


def criterion_2():
    def body():
        exact = {n: (turing.first_step_survival(n), turing.first_step_survival_enumerated(n)) for n in (1, 2)}
        mc = frequency_series(turing.domain(), turing.first_step, [10, 100], mode=Mode.MC, trials=100_000, rng=SEED)
        return exact, mc

    (exact, mc), dt = timed(body)
    ok = all(f == e == Fraction(1, 2) + Fraction(1, 2) * Fraction(n - 1, n + 1) for n, (f, e) in exact.items())
    parts = [f"n={n} exact {e}" for n, (_, e) in exact.items()]
    for pt in mc.points:
        p = float(turing.first_step_survival(pt.n))
        z = abs(pt.value - p) / math.sqrt(p * (1 - p) / pt.trials)
        ok &= z <= 4
        parts.append(f"n={pt.n} mc {pt.value:.4f} vs {p:.4f} ({z:.2f} sigma)")
    record(2, "first-step formula", ok, dt, 30.0, ", ".join(parts))


def criterion_3():
    ns = [10, 100, 1000, 10_000]
    wrong = [0]
    answered = [0]

    def audited(p):
        v = turing.algorithm_one(p)
        if v.answer is not oracle_verdict(p):
            wrong[0] += 1
        if v.answer is Answer.DONT_KNOW:
            return False
        answered[0] += 1
        # a Yes must halt and a No must crash under a plain run with ample fuel
        expected = "Halted" if v.answer is Answer.YES else "Crashed"
        wrong[0] += oracle_run(p, 4 * (p.n + 2)) != expected
        return True

    series, dt = timed(lambda: frequency_series(turing.domain(), audited, ns, mode=Mode.MC,
                                                trials=10_000, rng=SEED))
    pts = series.points
    trend = all(b.value + b.ci_half_width >= a.value - a.ci_half_width for a, b in zip(pts, pts[1:]))
    ok = trend and pts[-1].value >= 0.8 and wrong[0] == 0
    vals = " ".join(f"{p.value:.4f}+-{p.ci_half_width:.4f}" for p in pts)
    record(3, "halting genericity trend", ok, dt, 300.0,
           f"delta_D={vals}; wrong verdicts {wrong[0]} of {answered[0]} answered")


def criterion_4():
    def body():
        return [turing.nonneg_walk_fraction(k) == turing.nonneg_walk_fraction_brute(k) for k in range(21)]

    eq, dt = timed(body)
    record(4, "walk oracle", all(eq), dt, 10.0, f"{sum(eq)}/21 values of k in 0..20 equal")


def criterion_5():
    def body():
        dom = pcp.domain(2)
        exact = frequency_series(dom, lambda i: not pcp.has_prefix_pair(i), [1, 2])
        wrong = nos = 0
        for inst in pcp.enumerate_sphere(2, 2):
            if pcp.algorithm_two(inst).answer is Answer.NO:
                nos += 1
                wrong += pcp.search_solution(inst, 6) is not None
        mc = [pcp.mc_prefix_frequency(n, 2, 1_000_000, substream(SEED, n)) for n in (5, 10, 15, 20)]
        return exact, wrong, nos, mc

    (exact, wrong, nos, mc), dt = timed(body)
    values = [p.estimate for p in exact.points]
    ok = values == [Fraction(2, 4), Fraction(121, 324)] and wrong == 0
    below = []
    for pt in mc:
        sigma = math.sqrt(max(pt.value * (1 - pt.value), 0.0) / pt.trials)
        below.append(pt.value - 4 * sigma <= pcp.prefix_pair_bound(pt.n, 2))
    slope = float(np.polyfit([p.n for p in mc], [math.log(p.value) for p in mc], 1)[0])
    ok = ok and all(below) and slope < 0
    record(5, "PCP exact and bound", ok, dt, 120.0,
           f"no-prefix {values[0]}, {values[1]}; wrong No {wrong}/{nos}; "
           f"MC below bound {sum(below)}/4; log slope {slope:.4f}")


def criterion_6():
    def body():
        full = threesat.build_counting_dfa()
        counts_ok = all(threesat.word_count(full, L) == len(threesat.enumerate_accepted(full, L)) for L in range(15))
        core = threesat.Cnf3Instance(threesat.CORE_CLAUSES)
        unsat = not threesat.brute_force_sat(core)
        lam_full = threesat.growth_rate(full, tol=1e-10)
        lam_omit = [threesat.growth_rate(threesat.build_counting_dfa([c]), tol=1e-10) for c in threesat.CORE_CLAUSES]
        series = threesat.all_eight_density_series([64, 128, 256])
        return counts_ok, unsat, lam_full, lam_omit, series

    (counts_ok, unsat, lam_full, lam_omit, series), dt = timed(body)
    converged = all(abs(g.value - g.previous) < 1e-10 for g in [lam_full, *lam_omit])
    smaller = all(g.value < lam_full.value for g in lam_omit)
    pts = series.points
    nondecreasing = all(a.estimate <= b.estimate for a, b in zip(pts, pts[1:]))
    lam_ratio = max(g.value for g in lam_omit) / lam_full.value

    def log_complement(q: Fraction) -> float:
        c = 1 - q
        return math.log(c.numerator) - math.log(c.denominator)

    per_symbol = [math.exp((log_complement(b.estimate) - log_complement(a.estimate)) / (b.n - a.n))
                  for a, b in zip(pts, pts[1:])]
    ratio_ok = all(abs(r - lam_ratio) <= 0.05 for r in per_symbol)
    ok = counts_ok and unsat and converged and smaller and nondecreasing and ratio_ok
    deltas = ", ".join(f"{float(p.estimate):.3g}" for p in pts)
    record(6, "3-SAT counting", ok, dt, 120.0,
           f"counts<=14 {'ok' if counts_ok else 'MISMATCH'}; core unsat {unsat}; "
           f"lambda_full {lam_full.value:.8f} > max lambda_omit {max(g.value for g in lam_omit):.8f}; "
           f"delta(64,128,256)=[{deltas}]; per-symbol ratios "
           f"{', '.join(f'{r:.6f}' for r in per_symbol)} vs {lam_ratio:.6f}")


def criterion_7():
    rep, dt = timed(lambda: avgcase.separation_report(range(1, 201), horizon=200))
    ok = (rep.levin.verdict is avgcase.AvgVerdict.CONVERGES
          and rep.levin_eps_one.verdict is avgcase.AvgVerdict.DIVERGES
          and all(rep.generic_fails.values())
          and rep.dual_generic_classification != "incompatible"
          and rep.dual_levin.verdict is avgcase.AvgVerdict.DIVERGES
          and rep.incomparable)
    record(7, "average case separation", ok, dt, 30.0,
           f"Levin eps=1/2 {rep.levin.verdict.value}, eps=1 {rep.levin_eps_one.verdict.value}; "
           f"generic fails for {sum(rep.generic_fails.values())}/{len(rep.generic_fails)} polynomials; "
           f"dual generic {rep.dual_generic_classification}, dual Levin {rep.dual_levin.verdict.value}")


def criterion_8():
    def body():
        cases = [
            (avgcase.uniform_binary(lambda n: 1, "one"), 1, 1, lambda n: n),
            (avgcase.uniform_binary(lambda n: n, "length"), 1, 1, lambda n: n * n),
            (avgcase.uniform_binary(lambda n: n * n, "square"), 1, 2, lambda n: n),
        ]
        for t in (1, 2, 3, 5):
            for c, q in ((1, lambda n: n), (2, lambda n: n + 1), (3, lambda n: n * n)):
                cases.append((avgcase.spike(c, q, t), c, 1, q))
        violations = checked = 0
        for mf, c, k, q in cases:
            res = avgcase.markov_generic_bound(mf, c, k, q, range(1, 41))
            for n, mass in zip(res.ns, res.violation_mass):
                checked += 1
                violations += not mass <= Fraction(1, q(n))
        return violations, checked, len(cases)

    (violations, checked, ncases), dt = timed(body)
    record(8, "Markov guarantee", violations == 0, dt, 10.0,
           f"{violations} violations over {checked} (instance, n) checks in {ncases} instances")


def criterion_9():
    def body():
        pred = pcp.no_prefix_predicate(2)
        gaps = {}
        for n in (5, 20):
            s, b = spherical_vs_volume(pcp.domain(2), pred, n)
            gaps[n] = abs(s.estimate - b.estimate)
        return gaps

    gaps, dt = timed(body)
    record(9, "Stolz consistency", gaps[20] < gaps[5], dt, 60.0,
           f"gap n=5 {float(gaps[5]):.3e}, n=20 {float(gaps[20]):.3e}")


def battery_payloads() -> dict[str, str]:
    out = {}
    for name in sorted(EXPERIMENTS):
        out[name] = run({"experiment": name, "seed": SEED}).payload_json()
    return out


def criterion_10():
    def body():
        return battery_payloads(), battery_payloads()

    (first, second), dt = timed(body)
    same = [name for name in first if first[name] == second[name]]
    record(10, "reproducibility", len(same) == len(first), dt, None,
           f"{len(same)}/{len(first)} experiment payloads byte-identical")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 11)])
def test_acceptance(criterion):
    criterion()


if __name__ == "__main__":
    failed = 0
    for c in CRITERIA:
        try:
            c()
        except AssertionError:
            failed += 1
    raise SystemExit(1 if failed else 0)
