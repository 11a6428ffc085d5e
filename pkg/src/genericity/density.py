"""Size functions, frequency functions and convergence heuristics.

Everything problem-specific plugs in through :class:`SizedDomain` (how inputs
are stratified by size) and a predicate (the subset being measured).
Frequencies are computed either exactly, by enumerating a sphere or ball, or
by Monte Carlo sampling with a reproducible numpy generator.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from decimal import Context, Decimal
from enum import Enum
from fractions import Fraction
from statistics import NormalDist
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np

DEFAULT_CONFIDENCE = 0.99
_DEC = Context(prec=17)


class GenericityError(Exception):
    """Base class for errors raised by this package."""


class EnumerationUnavailable(GenericityError):
    pass


class SamplerUnavailable(GenericityError):
    pass


class EmptySphereError(GenericityError):
    """A sphere or ball with no elements; its frequency would be 0/0."""


class ZeroMassError(GenericityError):
    pass


class CapExceeded(GenericityError):
    pass


class PointError(GenericityError):
    """Wraps an error raised while computing the point at radius ``n``."""

    def __init__(self, n: int, cause: Exception):
        super().__init__(f"n={n}: {cause}")
        self.n = n
        self.cause = cause


class Geometry(str, Enum):
    SPHERE = "sphere"
    BALL = "ball"


class Mode(str, Enum):
    EXACT = "exact"
    MC = "monte-carlo"


class Answer(str, Enum):
    YES = "Yes"
    NO = "No"
    DONT_KNOW = "DontKnow"


@dataclass(frozen=True)
class PartialVerdict:
    """Outcome of a fuel-bounded partial algorithm."""

    answer: Answer
    steps: int
    fuel: int

    def __post_init__(self):
        if self.answer is not Answer.DONT_KNOW and self.steps > self.fuel:
            raise ValueError("a definite answer cannot consume more steps than its fuel")

    @property
    def halted(self) -> bool:
        return self.answer is not Answer.DONT_KNOW


# --------------------------------------------------------------------------
# random streams


def as_generator(rng: Any) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, np.random.SeedSequence):
        return np.random.default_rng(rng)
    if rng is None:
        raise ValueError("Monte Carlo estimation needs an explicit seed or generator")
    return np.random.default_rng(int(rng))


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator keyed by ``(seed, key)``; independent of any other key."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def uniform_below(rng: np.random.Generator, bound: int) -> int:
    """Uniform integer in ``[0, bound)`` for arbitrarily large ``bound``."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    if bound <= 2**62:
        return int(rng.integers(0, bound))
    nbits = (bound - 1).bit_length()
    nwords = (nbits + 31) // 32
    while True:
        words = rng.integers(0, 2**32, size=nwords, dtype=np.uint64)
        x = 0
        for w in words:
            x = (x << 32) | int(w)
        x >>= nwords * 32 - nbits
        if x < bound:
            return x


# --------------------------------------------------------------------------
# domains and predicates


@dataclass(frozen=True)
class SizedDomain:
    """A countable input set together with its stratification by size.

    ``sphere_count`` returns ``None`` when the count is unknown.
    ``enumerate_sphere`` and ``sample_sphere`` are optional.
    """

    name: str
    size_of: Callable[[Any], int]
    sphere_count: Callable[[int], int | None]
    enumerate_sphere: Callable[[int], Iterable[Any]] | None = None
    sample_sphere: Callable[[int, np.random.Generator], Any] | None = None
    min_size: int = 0
    enum_cap: int = 10**7

    def ball_count(self, n: int) -> int | None:
        total = 0
        for m in range(self.min_size, n + 1):
            c = self.sphere_count(m)
            if c is None:
                return None
            total += c
        return total

    def count(self, n: int, geometry: Geometry) -> int | None:
        if Geometry(geometry) is Geometry.SPHERE:
            return self.sphere_count(n) if n >= self.min_size else 0
        return self.ball_count(n)

    def iter_elements(self, n: int, geometry: Geometry) -> Iterator[Any]:
        if self.enumerate_sphere is None:
            raise EnumerationUnavailable(f"{self.name}: no enumerator")
        total = self.count(n, geometry)
        if total is None:
            raise EnumerationUnavailable(f"{self.name}: size of radius {n} is unknown")
        if total > self.enum_cap:
            raise CapExceeded(f"{self.name}: {total} elements at radius {n} exceed cap {self.enum_cap}")
        if Geometry(geometry) is Geometry.SPHERE:
            yield from self.enumerate_sphere(n)
        else:
            for m in range(self.min_size, n + 1):
                yield from self.enumerate_sphere(m)

    def sample(self, n: int, geometry: Geometry, rng: np.random.Generator) -> Any:
        if self.sample_sphere is None:
            raise SamplerUnavailable(f"{self.name}: no sampler")
        if Geometry(geometry) is Geometry.SPHERE:
            return self.sample_sphere(n, rng)
        # pick the shell with probability proportional to its cardinality
        counts = [self.sphere_count(m) for m in range(self.min_size, n + 1)]
        if any(c is None for c in counts):
            raise SamplerUnavailable(f"{self.name}: ball sampling needs exact sphere counts")
        r = uniform_below(rng, sum(counts))
        for m, c in zip(range(self.min_size, n + 1), counts):
            if r < c:
                return self.sample_sphere(m, rng)
            r -= c
        raise AssertionError("unreachable")


@dataclass(frozen=True)
class CountedPredicate:
    """A predicate that may also know its exact hit count on each sphere."""

    fn: Callable[[Any], bool]
    label: str
    sphere_hits: Callable[[int], int] | None = None

    def __call__(self, element: Any) -> bool:
        return bool(self.fn(element))


def predicate_label(predicate: Callable[[Any], bool]) -> str:
    return getattr(predicate, "label", None) or getattr(predicate, "__name__", "predicate")


def constant_true(_element: Any) -> bool:
    return True


# --------------------------------------------------------------------------
# frequency points and series


def _z(confidence: float) -> float:
    return NormalDist().inv_cdf(0.5 + confidence / 2)


def ci_half_width(hits: int, trials: int, confidence: float = DEFAULT_CONFIDENCE) -> float:
    """Normal-approximation half width; Wilson half width at hits in {0, trials}."""
    z = _z(confidence)
    p = hits / trials
    if 0 < hits < trials:
        return z * math.sqrt(p * (1 - p) / trials)
    denom = 1 + z * z / trials
    return z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))


@dataclass(frozen=True)
class FrequencyPoint:
    n: int
    mode: Mode
    hits: int
    trials: int
    estimate: Fraction | float
    ci_half_width: float

    def __post_init__(self):
        if not 0 <= self.hits <= self.trials or self.trials < 1:
            raise ValueError(f"invalid counts hits={self.hits} trials={self.trials}")

    @classmethod
    def exact(cls, n: int, hits: int, total: int) -> FrequencyPoint:
        if total == 0:
            raise EmptySphereError(f"radius {n} has no elements")
        return cls(n, Mode.EXACT, hits, total, Fraction(hits, total), 0.0)

    @classmethod
    def sampled(cls, n: int, hits: int, trials: int, confidence: float = DEFAULT_CONFIDENCE) -> FrequencyPoint:
        return cls(n, Mode.MC, hits, trials, hits / trials, ci_half_width(hits, trials, confidence))

    @property
    def value(self) -> float:
        return float(self.estimate)

    def to_dict(self) -> dict:
        if isinstance(self.estimate, Fraction):
            est: Any = {
                "num": self.estimate.numerator,
                "den": self.estimate.denominator,
                "decimal": _decimal(self.estimate),
            }
        else:
            est = self.estimate
        return {
            "n": self.n,
            "mode": self.mode.value,
            "hits": self.hits,
            "trials": self.trials,
            "estimate": est,
            "ci_half_width": self.ci_half_width,
        }


def _decimal(q: Fraction) -> str:
    return str(_DEC.divide(Decimal(q.numerator), Decimal(q.denominator)))


@dataclass(frozen=True)
class FrequencySeries:
    geometry: Geometry
    points: tuple[FrequencyPoint, ...]
    predicate_id: str
    # radii that failed, with the error message, when errors are collected
    errors: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        ns = [p.n for p in self.points]
        if any(a >= b for a, b in zip(ns, ns[1:])):
            raise ValueError("series radii must be strictly increasing")

    @property
    def ns(self) -> list[int]:
        return [p.n for p in self.points]

    @property
    def values(self) -> list[float]:
        return [p.value for p in self.points]

    def to_dict(self) -> dict:
        return {
            "geometry": Geometry(self.geometry).value,
            "predicate_id": self.predicate_id,
            "points": [p.to_dict() for p in self.points],
            "errors": [{"n": n, "error": msg} for n, msg in self.errors],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "geometry", "mode", "hits", "trials", "estimate", "ci_half_width"])
        for p in self.points:
            est = str(p.estimate) if isinstance(p.estimate, Fraction) else repr(p.estimate)
            w.writerow([p.n, Geometry(self.geometry).value, p.mode.value, p.hits, p.trials, est, repr(p.ci_half_width)])
        return buf.getvalue()


def frequency(
    domain: SizedDomain,
    predicate: Callable[[Any], bool],
    n: int,
    geometry: Geometry = Geometry.SPHERE,
    mode: Mode = Mode.EXACT,
    trials: int = 10_000,
    rng: Any = None,
    confidence: float = DEFAULT_CONFIDENCE,
) -> FrequencyPoint:
    """Frequency of ``predicate`` on the sphere or ball of radius ``n``.

    In exact mode a :class:`CountedPredicate` with ``sphere_hits`` is counted
    in closed form; anything else is enumerated.
    """
    geometry, mode = Geometry(geometry), Mode(mode)
    if mode is Mode.EXACT:
        hits_fn = getattr(predicate, "sphere_hits", None)
        if hits_fn is not None:
            radii = [n] if geometry is Geometry.SPHERE else range(domain.min_size, n + 1)
            hits = sum(hits_fn(m) for m in radii if m >= domain.min_size)
            total = domain.count(n, geometry)
            if total is None:
                raise EnumerationUnavailable(f"{domain.name}: count unknown at radius {n}")
            return FrequencyPoint.exact(n, hits, total)
        hits = total = 0
        for element in domain.iter_elements(n, geometry):
            total += 1
            hits += bool(predicate(element))
        return FrequencyPoint.exact(n, hits, total)

    if trials < 1:
        raise ValueError("trials must be positive")
    if domain.sample_sphere is None:
        raise SamplerUnavailable(f"{domain.name}: no sampler")
    if domain.count(n, geometry) == 0:
        raise EmptySphereError(f"radius {n} has no elements")
    gen = as_generator(rng)
    hits = sum(bool(predicate(domain.sample(n, geometry, gen))) for _ in range(trials))
    return FrequencyPoint.sampled(n, hits, trials, confidence)


def frequency_series(
    domain: SizedDomain,
    predicate: Callable[[Any], bool],
    n_list: Sequence[int],
    geometry: Geometry = Geometry.SPHERE,
    mode: Mode = Mode.EXACT,
    trials: int = 10_000,
    rng: int | None = None,
    confidence: float = DEFAULT_CONFIDENCE,
    collect_errors: bool = False,
) -> FrequencySeries:
    """One point per radius; Monte Carlo points use the substream ``(rng, n)``.

    A failing radius raises :class:`PointError`, or with ``collect_errors``
    is recorded in ``errors`` while the remaining radii are still computed.
    """
    n_list = list(n_list)
    if any(a >= b for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    points, errors = [], []
    for n in n_list:
        gen = substream(rng, n) if Mode(mode) is Mode.MC else None
        try:
            points.append(frequency(domain, predicate, n, geometry, mode, trials, gen, confidence))
        except GenericityError as exc:
            if not collect_errors:
                raise PointError(n, exc) from exc
            errors.append((n, f"{type(exc).__name__}: {exc}"))
    return FrequencySeries(Geometry(geometry), tuple(points), predicate_label(predicate), tuple(errors))


def spherical_vs_volume(
    domain: SizedDomain,
    predicate: Callable[[Any], bool],
    n: int,
    mode: Mode = Mode.EXACT,
    trials: int = 10_000,
    rng: Any = None,
) -> tuple[FrequencyPoint, FrequencyPoint]:
    """``(sphere frequency, ball frequency)`` at radius ``n``."""
    if Mode(mode) is Mode.MC:
        seed = rng if rng is not None else 0
        sphere_rng, ball_rng = substream(seed, n, 0), substream(seed, n, 1)
    else:
        sphere_rng = ball_rng = None
    return (
        frequency(domain, predicate, n, Geometry.SPHERE, mode, trials, sphere_rng),
        frequency(domain, predicate, n, Geometry.BALL, mode, trials, ball_rng),
    )


# --------------------------------------------------------------------------
# convergence classification


class Convergence(str, Enum):
    SUPERPOLYNOMIAL = "consistent-with-superpolynomial"
    EXPONENTIAL = "consistent-with-exponential"
    INCONCLUSIVE = "inconclusive"
    INCOMPATIBLE = "incompatible"


@dataclass(frozen=True)
class Tolerances:
    """Thresholds for :func:`classify_convergence`.

    ``min_r2`` is the goodness of fit below which a regression is not trusted;
    ``steepening`` is the factor by which the late log-log slope must exceed
    the early one before decay counts as faster than any fixed power.
    """

    min_r2: float = 0.9
    steepening: float = 1.5
    zero_tol: float = 0.0


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    rss: float
    r2: float

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "rss": self.rss, "r2": self.r2}


def _fit(x: Sequence[float], y: Sequence[float]) -> LineFit:
    x_arr, y_arr = np.asarray(x, float), np.asarray(y, float)
    slope, intercept = np.polyfit(x_arr, y_arr, 1)
    resid = y_arr - (slope * x_arr + intercept)
    rss = float(resid @ resid)
    tss = float(((y_arr - y_arr.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    return LineFit(float(slope), float(intercept), rss, r2)


@dataclass(frozen=True)
class ConvergenceReport:
    target: float
    residuals: tuple[float, ...]
    classification: Convergence
    fit: dict
    horizon: int
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "residuals": list(self.residuals),
            "classification": self.classification.value,
            "fit": self.fit,
            "horizon": self.horizon,
            "note": self.note,
        }


def classify_convergence(
    series: FrequencySeries, target: float, tolerances: Tolerances = Tolerances()
) -> ConvergenceReport:
    """Heuristic finite-horizon classification of ``|target - delta(n)|``.

    Fits log-residual against ``n`` (exponential decay) and against ``log n``
    (power-law decay). Decay that is better explained by a fixed power is
    incompatible with superpolynomial convergence.
    """
    if len(series.points) < 4:
        raise ValueError("classification needs at least 4 points")
    ns = series.ns
    residuals = tuple(abs(float(Fraction(target) - Fraction(p.estimate)))
                      if isinstance(p.estimate, Fraction) else abs(target - p.value)
                      for p in series.points)
    horizon = ns[-1]
    nonzero = [(n, r) for n, r in zip(ns, residuals) if r > tolerances.zero_tol]

    if not nonzero:
        return ConvergenceReport(target, residuals, Convergence.EXPONENTIAL, {}, horizon,
                                 "all residuals zero: infinite rate")
    if len(nonzero) < 3:
        # residuals vanish from some point on
        if nonzero[-1][0] < ns[-1]:
            return ConvergenceReport(target, residuals, Convergence.EXPONENTIAL, {}, horizon,
                                     "residuals reach zero within the horizon")
        return ConvergenceReport(target, residuals, Convergence.INCONCLUSIVE, {}, horizon,
                                 "too few nonzero residuals to fit")

    xs = [float(n) for n, _ in nonzero]
    logs = [math.log(r) for _, r in nonzero]
    exp_fit = _fit(xs, logs)
    pow_fit = _fit([math.log(x) for x in xs], logs)
    fit = {"exponential": exp_fit.to_dict(), "power": pow_fit.to_dict()}

    if exp_fit.slope >= 0 or logs[-1] >= logs[0]:
        cls, note = Convergence.INCOMPATIBLE, "residuals do not decrease"
    elif exp_fit.rss <= pow_fit.rss and exp_fit.r2 >= tolerances.min_r2:
        cls, note = Convergence.EXPONENTIAL, "log-residual linear in n"
    elif pow_fit.r2 >= tolerances.min_r2:
        half = len(xs) // 2
        early = _fit([math.log(x) for x in xs[: half + 1]], logs[: half + 1]).slope
        late = _fit([math.log(x) for x in xs[half:]], logs[half:]).slope
        if early < 0 and late < tolerances.steepening * early:
            cls, note = Convergence.SUPERPOLYNOMIAL, f"log-log slope steepens {early:.3g} -> {late:.3g}"
        else:
            cls, note = Convergence.INCOMPATIBLE, f"power-law decay with exponent {pow_fit.slope:.3g}"
    else:
        cls, note = Convergence.INCONCLUSIVE, "neither regression fits"
    return ConvergenceReport(target, residuals, cls, fit, horizon, note)


# --------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class Ensemble:
    """Per-radius probability weights obtained by conditioning an atomic measure."""

    geometry: Geometry
    mu: Callable[[Any], Any]
    mass: Callable[[int], Any]
    domain: SizedDomain
    normalized: bool = True

    def weight(self, n: int, element: Any) -> Any:
        z = self.mass(n)
        if z == 0:
            raise ZeroMassError(f"zero mass at radius {n}")
        return self.mu(element) / z

    def weights(self, n: int) -> dict[Any, Any]:
        return {x: self.weight(n, x) for x in self.domain.iter_elements(n, self.geometry)}


def conditional_ensemble(
    mu: Callable[[Any], Any],
    domain: SizedDomain,
    geometry: Geometry = Geometry.SPHERE,
    sphere_mass: Callable[[int], Any] | None = None,
) -> Ensemble:
    """Restrict the atomic measure ``mu`` to spheres/balls and renormalize.

    ``sphere_mass`` gives the total weight of each sphere in closed form;
    without it the sphere is enumerated.
    """
    geometry = Geometry(geometry)

    def shell(m: int) -> Any:
        if sphere_mass is not None:
            return sphere_mass(m)
        total = 0
        for x in domain.iter_elements(m, Geometry.SPHERE):
            w = mu(x)
            if w < 0:
                raise ValueError(f"negative weight {w} at {x!r}")
            total += w
        return total

    def mass(n: int) -> Any:
        if geometry is Geometry.SPHERE:
            z = shell(n)
        else:
            z = sum(shell(m) for m in range(domain.min_size, n + 1))
        if z == 0:
            raise ZeroMassError(f"zero mass at radius {n}")
        return z

    return Ensemble(geometry, mu, mass, domain)


# --------------------------------------------------------------------------
# generic upper bounds


@dataclass(frozen=True)
class TimedHalting:
    """Membership in the set of inputs answered within ``bound(size)`` steps."""

    solver: Callable[[Any], PartialVerdict]
    bound: Callable[[int], int]
    size_of: Callable[[Any], int]
    label: str = "answered-within-bound"

    def __call__(self, element: Any) -> bool:
        v = self.solver(element)
        return v.halted and v.steps <= self.bound(self.size_of(element))


def generic_time_report(
    domain: SizedDomain,
    solver: Callable[[Any], PartialVerdict],
    bound: Callable[[int], int],
    n_list: Sequence[int],
    mode: Mode = Mode.MC,
    trials: int = 10_000,
    rng: int | None = None,
    geometry: Geometry = Geometry.SPHERE,
) -> FrequencySeries:
    """Frequencies of the inputs the solver answers within ``bound`` steps.

    Whether the bound is (strongly) generic is read off by passing the
    result to :func:`classify_convergence` with target 1.
    """
    pred = TimedHalting(solver, bound, domain.size_of)
    return frequency_series(domain, pred, n_list, geometry, mode, trials, rng)


def binary_words(enum_cap: int = 10**7) -> SizedDomain:
    """The domain ``{0,1}*`` sized by length."""
    return SizedDomain(
        name="binary-words",
        size_of=len,
        sphere_count=lambda n: 2**n,
        enumerate_sphere=_binary_sphere,
        sample_sphere=lambda n, rng: "".join("01"[b] for b in rng.integers(0, 2, size=n)),
        min_size=0,
        enum_cap=enum_cap,
    )


def _binary_sphere(n: int) -> Iterator[str]:
    for i in range(2**n):
        yield format(i, f"0{n}b") if n else ""
