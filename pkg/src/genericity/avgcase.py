"""Polynomial-on-average checks and their comparison with generic bounds.

Integrals over a sphere are computed from a *profile*: a list of
``(value, weight, multiplicity)`` classes describing the sphere, where every
one of ``multiplicity`` elements has function value ``value`` and atomic
weight ``weight``.  Enumerable spheres get their profile by enumeration;
spheres too large to enumerate (``{0,1}^200``) supply it in closed form.

Sums that can overflow a float (``2^(2^n)``) use :mod:`mpmath`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import mpmath

from .density import (
    EmptySphereError,
    FrequencyPoint,
    FrequencySeries,
    GenericityError,
    Geometry,
    SizedDomain,
    ZeroMassError,
    binary_words,
    classify_convergence,
)

Profile = list[tuple[Any, Any, int]]


class PremiseViolated(GenericityError):
    def __init__(self, n: int, expectation: Any, allowed: Any):
        super().__init__(f"n={n}: sphere expectation {expectation} exceeds c*n = {allowed}")
        self.n = n


@dataclass(frozen=True)
class MeasuredFunction:
    """A nonnegative function on a sized domain together with an atomic measure.

    ``profile`` optionally describes sphere ``n`` in closed form; otherwise
    the sphere is enumerated.
    """

    evaluate: Callable[[Any], Any]
    mu: Callable[[Any], Any]
    domain: SizedDomain
    profile: Callable[[int], Profile] | None = None
    label: str = "f"

    def size_of(self, x: Any) -> int:
        return self.domain.size_of(x)

    def sphere_profile(self, n: int) -> Profile:
        if self.profile is not None:
            return self.profile(n)
        return [(self.evaluate(x), self.mu(x), 1) for x in self.domain.iter_elements(n, Geometry.SPHERE)]


def _mp(x: Any) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def _power(v: Any, eps: Any) -> Any:
    """``v ** eps``, exact when both are rational with an integral exponent."""
    if eps == 1:
        return v
    if isinstance(eps, int) or (isinstance(eps, Fraction) and eps.denominator == 1):
        return v ** int(eps)
    return _mp(v) ** _mp(eps)


def _sum(terms: Iterable[Any]) -> Any:
    total: Any = 0
    for t in terms:
        total = total + t
    return total


def sphere_mass(mf: MeasuredFunction, n: int) -> Any:
    prof = mf.sphere_profile(n)
    if not prof:
        raise EmptySphereError(f"sphere {n} is empty")
    return _sum(w * m for _, w, m in prof)


def expected_on_sphere(mf: MeasuredFunction, n: int, power: Any = 1) -> Any:
    """Expectation of ``f**power`` under the conditional measure on sphere ``n``."""
    prof = mf.sphere_profile(n)
    if not prof:
        raise EmptySphereError(f"sphere {n} is empty")
    z = _sum(w * m for _, w, m in prof)
    if z == 0:
        raise ZeroMassError(f"zero mass on sphere {n}")
    num = _sum(_power(v, power) * w * m for v, w, m in prof)
    if isinstance(num, mpmath.mpf) or isinstance(z, mpmath.mpf):
        return _mp(num) / _mp(z)
    if isinstance(num, float) or isinstance(z, float):
        return num / z
    return Fraction(num) / Fraction(z)


# --------------------------------------------------------------------------
# reports


class AvgCriterion(str, Enum):
    SPHERES = "spheres-expected"
    LEVIN = "levin"
    IMPAGLIAZZO = "impagliazzo"


class AvgVerdict(str, Enum):
    CONVERGES = "converges-at-horizon"
    DIVERGES = "diverges-at-horizon"
    BOUNDED = "polynomially-bounded-at-horizon"
    UNBOUNDED = "unbounded-at-horizon"


@dataclass(frozen=True)
class AvgReport:
    criterion: AvgCriterion
    parameters: dict
    ns: tuple[int, ...]
    values: tuple[float, ...]
    verdict: AvgVerdict
    note: str = ""

    @property
    def horizon(self) -> int:
        return self.ns[-1]

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion.value,
            "parameters": self.parameters,
            "horizon": self.horizon,
            "n": list(self.ns),
            "values": list(self.values),
            "verdict": self.verdict.value,
            "note": self.note,
        }


def _num(x: Any) -> float:
    # report values as floats; overflowing ones saturate to inf
    try:
        return float(x)
    except OverflowError:
        return float("inf")


@dataclass(frozen=True)
class LevinTolerances:
    """``ratio`` bounds successive size-level terms in the tail window of
    ``window`` levels; partial sums above ``bound`` count as divergent."""

    ratio: float = 0.9
    window: int = 20
    bound: float = 1e6


def levin_check(
    mf: MeasuredFunction, eps: Any, horizon: int, tol: LevinTolerances = LevinTolerances()
) -> AvgReport:
    """Partial sums of ``sum f(x)^eps / size(x) * mu(x)`` by size level.

    Size-0 elements are left out: ``1/size`` is undefined there.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    start = max(1, mf.domain.min_size)
    ns, terms, sums = [], [], []
    total = mpmath.mpf(0)
    for n in range(start, horizon + 1):
        level = _sum(_mp(_power(v, eps)) * _mp(w) * m for v, w, m in mf.sphere_profile(n)) / n
        total += level
        ns.append(n)
        terms.append(level)
        sums.append(total)
    tail = terms[-(tol.window + 1):]
    ratios = [b / a if a > 0 else mpmath.mpf(0) for a, b in zip(tail, tail[1:]) if a > 0 or b > 0]
    max_ratio = max((float(r) for r in ratios), default=0.0)
    params = {"eps": str(eps), "horizon": horizon, "ratio_tol": tol.ratio, "window": tol.window,
              "bound": tol.bound, "size_zero_excluded": True}
    if total > tol.bound:
        verdict, note = AvgVerdict.DIVERGES, f"partial sum exceeds {tol.bound:g}"
    elif max_ratio <= tol.ratio:
        verdict, note = AvgVerdict.CONVERGES, f"tail term ratios <= {max_ratio:.4g}"
    else:
        verdict, note = AvgVerdict.DIVERGES, f"tail term ratio {max_ratio:.4g} above {tol.ratio}"
    return AvgReport(AvgCriterion.LEVIN, params, tuple(ns), tuple(_num(s) for s in sums), verdict, note)


def ball_expectation(mf: MeasuredFunction, n: int, eps: Any = 1) -> Any:
    """Expectation of ``f**eps`` under ``mu`` conditioned on the ball of radius ``n``."""
    num = mpmath.mpf(0)
    z = mpmath.mpf(0)
    for m in range(mf.domain.min_size, n + 1):
        for v, w, mult in mf.sphere_profile(m):
            num += _mp(_power(v, eps)) * _mp(w) * mult
            z += _mp(w) * mult
    if z == 0:
        raise ZeroMassError(f"zero mass on ball {n}")
    return num / z


def impagliazzo_check(
    mf: MeasuredFunction, eps: Any, n_list: Sequence[int], growth: float = 2.0
) -> AvgReport:
    """Ball expectations of ``f**eps`` divided by ``n``.

    Bounded when the largest ratio over the later half of ``n_list`` stays
    within ``growth`` times the largest over the earlier half.
    """
    n_list = [n for n in n_list if n >= 1]
    if len(n_list) < 2:
        raise ValueError("need at least two radii")
    ratios = [ball_expectation(mf, n, eps) / n for n in n_list]
    half = len(ratios) // 2
    early, late = max(ratios[:half]), max(ratios[half:])
    c = float(max(ratios))
    params = {"eps": str(eps), "growth": growth, "fitted_constant": _num(c)}
    if late <= growth * early:
        verdict, note = AvgVerdict.BOUNDED, f"expectation/n <= {_num(c):.4g}"
    else:
        verdict, note = AvgVerdict.UNBOUNDED, f"expectation/n grew from {_num(early):.4g} to {_num(late):.4g}"
    return AvgReport(AvgCriterion.IMPAGLIAZZO, params, tuple(n_list), tuple(_num(r) for r in ratios), verdict, note)


# --------------------------------------------------------------------------
# Markov construction


@dataclass(frozen=True)
class MarkovResult:
    c: Any
    k: int
    ns: tuple[int, ...]
    expectations: tuple[Any, ...]
    violation_mass: tuple[Fraction, ...]
    allowed: tuple[Fraction, ...]
    series: FrequencySeries
    bound: Callable[[int], Any] = field(repr=False, compare=False)

    @property
    def holds(self) -> bool:
        return all(m <= a for m, a in zip(self.violation_mass, self.allowed))


def _root_exceeds(v: Any, k: int, threshold: Any) -> bool:
    # v**(1/k) > threshold  <=>  v > threshold**k for nonnegative values
    return v > _power(threshold, k)


def markov_generic_bound(
    mf: MeasuredFunction, c: Any, k: int, q: Callable[[int], Any], n_list: Sequence[int]
) -> MarkovResult:
    """Check the sphere-expectation premise and measure the violation set.

    With ``E[f^(1/k)] <= c*n`` on sphere ``n``, the inputs where ``f`` reaches
    ``(c*q(n)*n)**k`` carry conditional mass at most ``1/q(n)``.  Returns the
    bound and, per ``n``, that mass (exact when the weights are rational).
    """
    if k < 1:
        raise ValueError("k must be at least 1")

    def bound(n: int) -> Any:
        return _power(c * q(n) * n, k)

    ns, exps, masses, allowed, points = [], [], [], [], []
    for n in n_list:
        prof = mf.sphere_profile(n)
        if not prof:
            raise EmptySphereError(f"sphere {n} is empty")
        z = _sum(w * m for _, w, m in prof)
        if z == 0:
            raise ZeroMassError(f"zero mass on sphere {n}")
        expectation = _root_expectation(prof, k, z)
        if expectation > c * n:
            raise PremiseViolated(n, expectation, c * n)
        threshold = c * q(n) * n
        bad = _sum(w * m for v, w, m in prof if _root_exceeds(v, k, threshold))
        mass = _ratio(bad, z)
        ns.append(n)
        exps.append(expectation)
        masses.append(mass)
        allowed.append(_ratio(1, q(n)))
        points.append(_mass_point(n, mass))
    series = FrequencySeries(Geometry.SPHERE, tuple(points), f"violation-set-{mf.label}")
    return MarkovResult(c, k, tuple(ns), tuple(exps), tuple(masses), tuple(allowed), series, bound)


def _ratio(a: Any, b: Any) -> Any:
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return Fraction(a) / Fraction(b)
    return _mp(a) / _mp(b)


def _root(v: Any, k: int) -> Any:
    """``v**(1/k)``, exact when ``v`` is the k-th power of an integer."""
    if k == 1:
        return v
    if isinstance(v, int) and v >= 0:
        r = _iroot(v, k)
        if r**k == v:
            return r
    return mpmath.root(_mp(v), k)


def _iroot(v: int, k: int) -> int:
    # floor of the k-th root by integer Newton iteration
    if v < 2:
        return v
    x = 1 << -(-v.bit_length() // k)
    while True:
        y = ((k - 1) * x + v // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def _root_expectation(prof: Profile, k: int, z: Any) -> Any:
    return _ratio(_sum(_root(v, k) * w * m for v, w, m in prof), z)


def _mass_point(n: int, mass: Any) -> FrequencyPoint:
    if not isinstance(mass, Fraction):
        mass = Fraction(float(mass))
    return FrequencyPoint.exact(n, mass.numerator, mass.denominator)


# --------------------------------------------------------------------------
# the binary-words example and its dual


def example_mu(w: str) -> Fraction:
    """``2^(-2|w|-1)`` on binary words; sums to 1 over ``{0,1}*``."""
    return Fraction(1, 2 ** (2 * len(w) + 1))


def exponential_length(enum_cap: int = 10**6) -> MeasuredFunction:
    """``f(w) = 2^|w|`` under ``mu(w) = 2^(-2|w|-1)``."""
    return MeasuredFunction(
        evaluate=lambda w: 2 ** len(w),
        mu=example_mu,
        domain=binary_words(enum_cap),
        profile=lambda n: [(2**n, Fraction(1, 2 ** (2 * n + 1)), 2**n)],
        label="2^|w|",
    )


def huge_on_zero_word(enum_cap: int = 10**6) -> MeasuredFunction:
    """``2^(2^|w|)`` on the all-zeros word of each length and 1 elsewhere."""

    def g(w: str) -> Any:
        return mpmath.mpf(2) ** (2 ** len(w)) if "1" not in w else 1

    def profile(n: int) -> Profile:
        weight = Fraction(1, 2 ** (2 * n + 1))
        prof: Profile = [(mpmath.mpf(2) ** (2**n), weight, 1)]
        if n:
            prof.append((1, weight, 2**n - 1))
        return prof

    return MeasuredFunction(g, example_mu, binary_words(enum_cap), profile, "2^(2^|w|)-on-zero-word")


def uniform_binary(f: Callable[[int], Any], label: str) -> MeasuredFunction:
    """A function of the length only under counting measure, so that both
    sphere and ball conditionals are uniform."""
    return MeasuredFunction(
        evaluate=lambda w: f(len(w)),
        mu=lambda w: 1,
        domain=binary_words(),
        profile=lambda n: [(f(n), 1, 2**n)],
        label=label,
    )


@dataclass(frozen=True)
class Polynomial:
    coefficient: int
    degree: int

    def __call__(self, n: int) -> int:
        return self.coefficient * n**self.degree

    def __str__(self) -> str:
        return f"{self.coefficient}*n^{self.degree}"


DEFAULT_FAMILY = tuple(Polynomial(a, j) for a in (1, 10, 100) for j in range(13))


def generic_bound_series(
    mf: MeasuredFunction, p: Callable[[int], Any], n_list: Sequence[int]
) -> FrequencySeries:
    """Conditional sphere mass of ``{x : f(x) <= p(size(x))}`` for each ``n``."""
    points = []
    for n in n_list:
        prof = mf.sphere_profile(n)
        z = _sum(w * m for _, w, m in prof)
        good = _sum(w * m for v, w, m in prof if v <= p(n))
        mass = _ratio(good, z)
        points.append(_mass_point(n, mass))
    return FrequencySeries(Geometry.SPHERE, tuple(points), f"{mf.label}<=poly")


def crossover(p: Callable[[int], int], search_limit: int = 4096) -> int:
    """Smallest ``N`` with ``2^n > p(n)`` for every ``n >= N`` up to ``search_limit``."""
    last_bad = -1
    for n in range(search_limit + 1):
        if 2**n <= p(n):
            last_bad = n
    return last_bad + 1


@dataclass(frozen=True)
class SeparationReport:
    levin: AvgReport
    levin_eps_one: AvgReport
    crossovers: dict[str, int]
    generic_fails: dict[str, bool]
    dual_generic: FrequencySeries
    dual_generic_classification: str
    dual_levin: AvgReport

    @property
    def incomparable(self) -> bool:
        return (
            self.levin.verdict is AvgVerdict.CONVERGES
            and all(self.generic_fails.values())
            and self.dual_generic_classification != "incompatible"
            and self.dual_levin.verdict is AvgVerdict.DIVERGES
        )

    def to_dict(self) -> dict:
        return {
            "levin_eps_half": self.levin.to_dict(),
            "levin_eps_one": self.levin_eps_one.to_dict(),
            "crossovers": self.crossovers,
            "generic_fails_past_crossover": self.generic_fails,
            "dual_generic": self.dual_generic.to_dict(),
            "dual_generic_classification": self.dual_generic_classification,
            "dual_levin": self.dual_levin.to_dict(),
            "incomparable": self.incomparable,
        }


def separation_report(
    n_list: Sequence[int] = tuple(range(1, 201)),
    family: Sequence[Polynomial] = DEFAULT_FAMILY,
    horizon: int = 200,
) -> SeparationReport:
    """Evidence, at a finite horizon, that average-case and generic polynomial
    time are incomparable.

    (a) ``2^|w|`` passes Levin's test at ``eps = 1/2``; (b) it exceeds every
    polynomial of ``family`` on whole spheres past the crossover; (c) a
    function that is huge only on the all-zeros words passes the generic test
    but fails Levin's.
    """
    f = exponential_length()
    levin = levin_check(f, Fraction(1, 2), horizon)
    levin_one = levin_check(f, 1, horizon)
    crossovers, fails = {}, {}
    for p in family:
        N = crossover(p)
        top = max(max(n_list), N + 10)
        series = generic_bound_series(f, p, range(N, top + 1))
        crossovers[str(p)] = N
        fails[str(p)] = all(pt.hits == 0 for pt in series.points)
    g = huge_on_zero_word()
    dual = generic_bound_series(g, Polynomial(1, 0), [n for n in n_list if n >= 1])
    dual_cls = classify_convergence(dual, 1.0).classification.value
    dual_levin = levin_check(g, Fraction(1, 2), horizon)
    return SeparationReport(levin, levin_one, crossovers, fails, dual, dual_cls, dual_levin)


def spike(c: int, q: Callable[[int], int], t: int) -> MeasuredFunction:
    """Sphere ``n`` has ``t*q(n)`` equally weighted points; ``f`` is
    ``c*n*q(n)*t`` on one of them and 0 elsewhere, so ``E f = c*n`` exactly
    and Markov's inequality is tight up to the factor ``t``."""

    def profile(n: int) -> Profile:
        size = t * q(n)
        w = Fraction(1, size)
        return [(c * n * q(n) * t, w, 1), (0, w, size - 1)]

    dom = SizedDomain("spike", size_of=lambda x: x[0], sphere_count=lambda n: t * q(n), min_size=1)
    return MeasuredFunction(lambda x: x[1], lambda x: Fraction(1, t * q(x[0])), dom, profile, f"spike-t{t}")
