"""Experiment battery: one named experiment per reproduced result.

Every experiment takes a validated :class:`ExperimentConfig` and returns a
``data`` payload, a dict of named boolean ``checks`` and optional plot rows.
The numbers come from the library modules; nothing is computed here beyond
comparing them.
"""

from __future__ import annotations

import json
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Callable, Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, model_validator

from . import avgcase, pcp, threesat, turing
from .density import (
    FrequencySeries,
    Geometry,
    Mode,
    classify_convergence,
    frequency,
    frequency_series,
    generic_time_report,
    spherical_vs_volume,
    substream,
)

ExperimentName = Literal[
    "halting-genericity",
    "halting-n1-exact",
    "first-step",
    "walk-oracle",
    "pcp-exact",
    "pcp-mc",
    "pcp-bound",
    "threesat-counts",
    "threesat-eigen",
    "threesat-density",
    "avp-levin",
    "avp-separation",
    "markov-bound",
    "stolz-consistency",
]

MONTE_CARLO = {"halting-genericity", "first-step", "pcp-mc"}


class ConfigError(ValueError):
    pass


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: ExperimentName
    n_list: Optional[list[int]] = None
    lengths: Optional[list[int]] = None
    mode: Optional[Literal["exact", "monte-carlo"]] = None
    trials: Optional[int] = None
    seed: Optional[int] = None
    fuel: Optional[int] = None
    cap: Optional[int] = None
    k: int = 2
    k_max: int = 20
    max_len: int = 6
    horizon: int = 200
    out: Optional[str] = None
    csv: Optional[str] = None
    tolerances: dict[str, float] = {}

    @model_validator(mode="after")
    def _check(self):
        if self.experiment in MONTE_CARLO and self.seed is None:
            raise ValueError(f"experiment {self.experiment} is Monte Carlo and needs a seed")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be positive")
        for name in ("n_list", "lengths"):
            xs = getattr(self, name)
            if xs is not None and any(a >= b for a, b in zip(xs, xs[1:])):
                raise ValueError(f"{name} must be strictly increasing")
        return self

    def tol(self, key: str, default: float) -> float:
        return self.tolerances.get(key, default)


def load_config(path: str | Path, **overrides: Any) -> ExperimentConfig:
    """Read a flat YAML (or JSON) mapping; ``None`` overrides are ignored."""
    raw = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a key/value mapping")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return validate(raw)


def validate(raw: dict) -> ExperimentConfig:
    from pydantic import ValidationError

    try:
        return ExperimentConfig(**raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<config>"
            lines.append(f"{loc}: {err['msg']}")
        raise ConfigError("; ".join(lines)) from None


@dataclass
class Outcome:
    data: dict
    checks: dict[str, bool]
    plot: tuple[list[str], list[list[Any]]] | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    data: dict
    checks: dict[str, bool]
    wall_time: float
    tool_version: str
    timestamp: str
    plot: tuple[list[str], list[list[Any]]] | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def payload(self) -> dict:
        """The reproducible part: config echo, data and verdicts."""
        return {
            "config": self.config.model_dump(exclude={"out", "csv"}),
            "tool_version": self.tool_version,
            "data": self.data,
            "verdict": {"checks": self.checks, "passed": self.passed},
        }

    def to_json(self) -> str:
        doc = {"header": {"timestamp": self.timestamp, "wall_time_s": self.wall_time}, "payload": self.payload()}
        return json.dumps(_jsonable(doc), sort_keys=True, indent=2)

    def payload_json(self) -> str:
        return json.dumps(_jsonable(self.payload()), sort_keys=True)


def _jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator, "decimal": str(float(x))}
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return x


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0.1.0"


def run(config: ExperimentConfig | dict) -> ExperimentResult:
    """Run the named experiment and write JSON/CSV outputs if configured."""
    if isinstance(config, dict):
        config = validate(config)
    fn = EXPERIMENTS[config.experiment]
    t0 = time.perf_counter()
    outcome = fn(config)
    elapsed = time.perf_counter() - t0
    result = ExperimentResult(
        config=config,
        data=outcome.data,
        checks=outcome.checks,
        wall_time=round(elapsed, 6),
        tool_version=tool_version(),
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        plot=outcome.plot,
    )
    if config.out and config.out != "-":
        Path(config.out).write_text(result.to_json() + "\n")
    if config.csv:
        export_plot_data(result, config.csv)
    return result


class NotASeries(ValueError):
    pass


def export_plot_data(result: ExperimentResult, path: str | Path) -> Path:
    """Write the experiment's plot rows as CSV; results without rows are rejected."""
    if result.plot is None:
        raise NotASeries(f"experiment {result.config.experiment} has no plottable series")
    header, rows = result.plot
    lines = [",".join(header)] + [",".join(_cell(c) for c in row) for row in rows]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def _cell(c: Any) -> str:
    if isinstance(c, float):
        return repr(c)
    return str(c)


def _series_plot(series: FrequencySeries) -> tuple[list[str], list[list[Any]]]:
    return ["n", "estimate", "ci_half_width"], [[p.n, p.value, p.ci_half_width] for p in series.points]


def _sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


# --------------------------------------------------------------------------
# halting problem


class _AuditedDecision:
    """Predicate "Algorithm 1 answers"; tallies verdicts contradicted by a
    plain run that ignores state repetition."""

    label = "halts-or-crashes-before-repeat"

    def __init__(self, fuel: int | None = None):
        self.wrong = 0
        self.answered = 0
        self.fuel = fuel

    def __call__(self, p: turing.TmProgram) -> bool:
        v = turing.algorithm_one(p)
        if v.answer is turing.Answer.DONT_KNOW:
            return False
        self.answered += 1
        ref = turing.simulate(p, self.fuel or 4 * (p.n + 2), stop_on_repeat=False).kind
        expected = turing.RunKind.HALTED if v.answer is turing.Answer.YES else turing.RunKind.CRASHED
        self.wrong += ref is not expected
        return True


def halting_genericity(cfg: ExperimentConfig) -> Outcome:
    n_list = cfg.n_list or [10, 100, 1000, 10000]
    trials = cfg.trials or 10_000
    audit = _AuditedDecision(cfg.fuel)
    mode = Mode(cfg.mode or Mode.MC)
    series = frequency_series(turing.domain(), audit, n_list, mode=mode, trials=trials, rng=cfg.seed,
                              collect_errors=True)
    pts = series.points
    if not pts:
        return Outcome({"series": series.to_dict()}, {"no_point_errors": False})
    trend = all(b.value + b.ci_half_width >= a.value - a.ci_half_width for a, b in zip(pts, pts[1:]))
    floor = cfg.tol("final_density_min", 0.8)
    timed = generic_time_report(turing.domain(), turing.algorithm_one, lambda n: n + 2, n_list[:2],
                                trials=min(trials, 2000), rng=cfg.seed)
    data = {
        "series": series.to_dict(),
        "answered": audit.answered,
        "wrong_verdicts": audit.wrong,
        "timed_series_bound_n_plus_2": timed.to_dict(),
        "convergence": classify_convergence(series, 1.0).to_dict() if len(pts) >= 4 else None,
    }
    checks = {
        "nondecreasing_within_ci": trend,
        "final_density_at_least": pts[-1].value >= floor,
        "no_wrong_verdicts": audit.wrong == 0,
        "no_point_errors": not series.errors,
    }
    return Outcome(data, checks, _series_plot(series))


def halting_n1_exact(cfg: ExperimentConfig) -> Outcome:
    counts = Counter(turing.algorithm_one(p).answer.value for p in turing.enumerate_sphere(1))
    point = frequency(turing.domain(), turing.decided, 1)
    sc = turing.sphere_count(1)
    data = {
        "verdicts": dict(sorted(counts.items())),
        "density": point.to_dict(),
        "sphere_count": {"direct": sc.direct, "closed_formula": sc.closed_formula, "agrees": sc.agrees},
    }
    checks = {
        "verdict_counts": dict(counts) == {"Yes": 16, "No": 32, "DontKnow": 16},
        "density_three_quarters": point.estimate == Fraction(3, 4),
    }
    return Outcome(data, checks)


def first_step(cfg: ExperimentConfig) -> Outcome:
    exact_ns = [n for n in (cfg.n_list or [1, 2, 10, 100]) if n <= 2]
    mc_ns = [n for n in (cfg.n_list or [1, 2, 10, 100]) if n > 2]
    trials = cfg.trials or 100_000
    k_sigma = cfg.tol("sigmas", 4.0)
    data: dict = {"exact": [], "monte_carlo": []}
    checks = {}
    for n in exact_ns:
        formula = turing.first_step_survival(n)
        enumerated = turing.first_step_survival_enumerated(n)
        data["exact"].append({"n": n, "formula": formula, "enumerated": enumerated})
        checks[f"exact_n{n}"] = formula == enumerated
    series = frequency_series(turing.domain(), turing.first_step, mc_ns, mode=Mode.MC, trials=trials, rng=cfg.seed,
                              collect_errors=True)
    data["errors"] = series.to_dict()["errors"]
    if series.errors:
        checks["no_point_errors"] = False
    for pt in series.points:
        expected = float(turing.first_step_survival(pt.n))
        sigma = _sigma(expected, trials)
        data["monte_carlo"].append({**pt.to_dict(), "formula": expected, "sigma": sigma})
        checks[f"mc_n{pt.n}_within_{k_sigma:g}sigma"] = abs(pt.value - expected) <= k_sigma * sigma
    return Outcome(data, checks, _series_plot(series) if series.points else None)


def walk_oracle(cfg: ExperimentConfig) -> Outcome:
    rows = []
    for k in range(cfg.k_max + 1):
        rows.append({"k": k, "closed_form": turing.nonneg_walk_fraction(k),
                     "brute_force": turing.nonneg_walk_fraction_brute(k)})
    checks = {"closed_form_matches_brute_force": all(r["closed_form"] == r["brute_force"] for r in rows)}
    plot = (["k", "fraction"], [[r["k"], float(r["closed_form"])] for r in rows])
    return Outcome({"walks": rows}, checks, plot)


# --------------------------------------------------------------------------
# PCP


def pcp_exact(cfg: ExperimentConfig) -> Outcome:
    k = cfg.k
    n_list = cfg.n_list or [1, 2]
    dom = pcp.domain(k, cfg.cap or pcp.DEFAULT_ENUM_CAP)
    enumerated = frequency_series(dom, lambda inst: not pcp.has_prefix_pair(inst), n_list)
    counted = frequency_series(dom, pcp.no_prefix_predicate(k), n_list)
    wrong = checked = 0
    sound_n = n_list[-1]
    for inst in pcp.enumerate_sphere(sound_n, k, cfg.cap or pcp.DEFAULT_ENUM_CAP):
        if pcp.algorithm_two(inst).answer is pcp.Answer.NO:
            checked += 1
            wrong += pcp.search_solution(inst, cfg.max_len) is not None
    data = {
        "enumerated": enumerated.to_dict(),
        "closed_form": counted.to_dict(),
        "soundness": {"n": sound_n, "no_verdicts": checked, "wrong": wrong, "max_len": cfg.max_len},
    }
    checks = {
        "enumeration_matches_counts": [p.estimate for p in enumerated.points] == [p.estimate for p in counted.points],
        "no_wrong_no_verdicts": wrong == 0,
    }
    if k == 2 and n_list[:2] == [1, 2]:
        checks["known_values"] = [p.estimate for p in enumerated.points[:2]] == [Fraction(2, 4), Fraction(121, 324)]
    return Outcome(data, checks, _series_plot(enumerated))


def pcp_mc(cfg: ExperimentConfig) -> Outcome:
    k = cfg.k
    n_list = cfg.n_list or [5, 10, 15, 20]
    trials = cfg.trials or 1_000_000
    k_sigma = cfg.tol("sigmas", 4.0)
    points = [pcp.mc_prefix_frequency(n, k, trials, substream(cfg.seed, n)) for n in n_list]
    series = FrequencySeries(Geometry.SPHERE, tuple(points), "prefix-pair")
    rows, checks = [], {}
    for pt in points:
        bound = pcp.prefix_pair_bound(pt.n, k)
        sigma = _sigma(pt.value, trials)
        rows.append({**pt.to_dict(), "bound": bound, "sigma": sigma})
        checks[f"n{pt.n}_below_bound"] = pt.value - k_sigma * sigma <= bound
    positive = [(pt.n, math.log(pt.value)) for pt in points if pt.hits > 0]
    slope = None
    if len(positive) >= 2:
        slope = float(np.polyfit([n for n, _ in positive], [y for _, y in positive], 1)[0])
    checks["log_frequency_slope_negative"] = slope is not None and slope < 0
    return Outcome({"points": rows, "log_slope": slope}, checks, _series_plot(series))


def pcp_bound(cfg: ExperimentConfig) -> Outcome:
    k = cfg.k
    n_list = cfg.n_list or list(range(1, 21))
    series = frequency_series(pcp.domain(k), pcp.prefix_predicate(k), n_list)
    rows, checks = [], {}
    for pt in series.points:
        bound = pcp.prefix_pair_bound(pt.n, k)
        rows.append({"n": pt.n, "exact": pt.estimate, "bound": bound, "closed_count": pcp.sphere_count(pt.n, k).closed_formula})
        if bound <= 1:
            checks[f"n{pt.n}_exact_below_bound"] = pt.estimate <= bound
    no_prefix = frequency_series(pcp.domain(k), pcp.no_prefix_predicate(k), n_list)
    report = classify_convergence(no_prefix, 1.0) if len(n_list) >= 4 else None
    if report is not None:
        checks["no_prefix_converges_exponentially"] = report.classification.value == "consistent-with-exponential"
    data = {"rows": rows, "convergence": report.to_dict() if report else None}
    return Outcome(data, checks, _series_plot(series))


def stolz_consistency(cfg: ExperimentConfig) -> Outcome:
    k = cfg.k
    n_list = cfg.n_list or [5, 10, 15, 20]
    dom = pcp.domain(k)
    pred = pcp.no_prefix_predicate(k)
    rows = []
    for n in n_list:
        sphere, ball = spherical_vs_volume(dom, pred, n)
        rows.append({"n": n, "sphere": sphere.estimate, "ball": ball.estimate,
                     "gap": abs(float(sphere.estimate - ball.estimate))})
    checks = {"gap_shrinks": rows[-1]["gap"] < rows[0]["gap"]}
    plot = (["n", "sphere", "ball", "gap"], [[r["n"], float(r["sphere"]), float(r["ball"]), r["gap"]] for r in rows])
    return Outcome({"rows": rows}, checks, plot)


# --------------------------------------------------------------------------
# 3-SAT


def threesat_counts(cfg: ExperimentConfig) -> Outcome:
    max_len = (cfg.lengths or [14])[-1]
    dfa = threesat.build_counting_dfa()
    counts = threesat.count_series(dfa, max_len)
    walked = [len(threesat.enumerate_accepted(dfa, L)) for L in range(max_len + 1)]
    gf = threesat.clause_length_generating_counts(max_len)
    core = threesat.Cnf3Instance(threesat.CORE_CLAUSES)
    data = {"lengths": list(range(max_len + 1)), "transfer_matrix": counts, "dfa_walk": walked,
            "generating_function": gf, "core_instance": core.render(), "core_length": core.size}
    checks = {
        "matrix_equals_walk": counts == walked,
        "matrix_equals_generating_function": counts == gf,
        "core_clauses_unsatisfiable": not threesat.brute_force_sat(core),
    }
    plot = (["length", "count"], [[L, c] for L, c in enumerate(counts)])
    return Outcome(data, checks, plot)


def _eigen(tol: float) -> tuple[threesat.GrowthRate, list[tuple[str, threesat.GrowthRate]]]:
    full = threesat.growth_rate(threesat.build_counting_dfa(), tol=tol)
    omits = [(c.render(), threesat.growth_rate(threesat.build_counting_dfa([c]), tol=tol))
             for c in threesat.CORE_CLAUSES]
    return full, omits


def threesat_eigen(cfg: ExperimentConfig) -> Outcome:
    tol = cfg.tol("eigen_tol", 1e-10)
    full, omits = _eigen(tol)
    data = {"lambda_full": full.value, "iterations_full": full.iterations,
            "omit": [{"clause": c, "lambda": g.value, "iterations": g.iterations} for c, g in omits]}
    checks = {f"omit_{c}_smaller": g.value < full.value for c, g in omits}
    plot = (["clause", "lambda_omit", "lambda_full"], [[c, g.value, full.value] for c, g in omits])
    return Outcome(data, checks, plot)


def threesat_density(cfg: ExperimentConfig) -> Outcome:
    lengths = cfg.lengths or [64, 128, 256]
    series = threesat.all_eight_density_series(lengths)
    ie = threesat.all_eight_density_series(lengths, method="inclusion-exclusion")
    full, omits = _eigen(cfg.tol("eigen_tol", 1e-10))
    lam_ratio = max(g.value for _, g in omits) / full.value
    pts = series.points
    ratios = []
    for a, b in zip(pts, pts[1:]):
        ra, rb = 1 - a.estimate, 1 - b.estimate
        per_symbol = math.exp((_log_fraction(rb) - _log_fraction(ra)) / (b.n - a.n))
        ratios.append({"from": a.n, "to": b.n, "per_symbol_ratio": per_symbol})
    window = cfg.tol("ratio_window", 0.05)
    data = {"series": series.to_dict(), "inclusion_exclusion": ie.to_dict(),
            "lambda_ratio": lam_ratio, "complement_ratios": ratios}
    checks = {
        "nondecreasing": all(a.estimate <= b.estimate for a, b in zip(pts, pts[1:])),
        "methods_agree": [p.estimate for p in pts] == [p.estimate for p in ie.points],
        "geometric_ratio_near_lambda_ratio": all(abs(r["per_symbol_ratio"] - lam_ratio) <= window for r in ratios),
    }
    return Outcome(data, checks, _series_plot(series))


def _log_fraction(q: Fraction) -> float:
    return math.log(q.numerator) - math.log(q.denominator)


# --------------------------------------------------------------------------
# average case


def avp_levin(cfg: ExperimentConfig) -> Outcome:
    f = avgcase.exponential_length()
    half = avgcase.levin_check(f, Fraction(1, 2), cfg.horizon)
    one = avgcase.levin_check(f, 1, cfg.horizon)
    imp = avgcase.impagliazzo_check(f, Fraction(1, 2), list(range(1, cfg.horizon + 1)))
    data = {"levin_eps_half": half.to_dict(), "levin_eps_one": one.to_dict(), "impagliazzo_eps_half": imp.to_dict()}
    checks = {
        "converges_eps_half": half.verdict is avgcase.AvgVerdict.CONVERGES,
        "diverges_eps_one": one.verdict is avgcase.AvgVerdict.DIVERGES,
        "impagliazzo_agrees_eps_half": imp.verdict is avgcase.AvgVerdict.BOUNDED,
    }
    plot = (["n", "partial_sum"], [[n, v] for n, v in zip(half.ns, half.values)])
    return Outcome(data, checks, plot)


def avp_separation(cfg: ExperimentConfig) -> Outcome:
    n_list = cfg.n_list or list(range(1, cfg.horizon + 1))
    rep = avgcase.separation_report(n_list, horizon=cfg.horizon)
    checks = {
        "levin_converges": rep.levin.verdict is avgcase.AvgVerdict.CONVERGES,
        "generic_fails_every_polynomial": all(rep.generic_fails.values()),
        "dual_passes_generic": rep.dual_generic_classification != "incompatible",
        "dual_fails_levin": rep.dual_levin.verdict is avgcase.AvgVerdict.DIVERGES,
    }
    return Outcome(rep.to_dict(), checks, _series_plot(rep.dual_generic))


def markov_bound(cfg: ExperimentConfig) -> Outcome:
    n_list = cfg.n_list or list(range(1, 31))
    cases = {
        "constant-one,q=n": (avgcase.uniform_binary(lambda n: 1, "one"), 1, 1, lambda n: n),
        "length,q=n^2": (avgcase.uniform_binary(lambda n: n, "length"), 1, 1, lambda n: n * n),
        "spike-t2,q=n": (avgcase.spike(1, lambda n: n, 2), 1, 1, lambda n: n),
        "spike-t2,q=n^2": (avgcase.spike(3, lambda n: n * n, 2), 3, 1, lambda n: n * n),
        "spike-t5,q=n+1": (avgcase.spike(2, lambda n: n + 1, 5), 2, 1, lambda n: n + 1),
        "square,k=2,q=n": (avgcase.uniform_binary(lambda n: n * n, "square"), 1, 2, lambda n: n),
        "spike-squared-t3,k=2,q=2n": (_squared(avgcase.spike(1, lambda n: 2 * n, 3)), 1, 2, lambda n: 2 * n),
    }
    data, checks = {}, {}
    for name, (mf, c, k, q) in cases.items():
        res = avgcase.markov_generic_bound(mf, c, k, q, n_list)
        data[name] = {"n": list(res.ns), "violation_mass": list(res.violation_mass), "allowed": list(res.allowed)}
        checks[name] = res.holds
    return Outcome(data, checks)


def _squared(mf: avgcase.MeasuredFunction) -> avgcase.MeasuredFunction:
    # E[(f^2)^(1/2)] = E[f], so the premise carries over with k = 2
    return avgcase.MeasuredFunction(
        lambda x: mf.evaluate(x) ** 2, mf.mu, mf.domain,
        lambda n: [(v * v, w, m) for v, w, m in mf.profile(n)], f"({mf.label})^2",
    )


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], Outcome]] = {
    "halting-genericity": halting_genericity,
    "halting-n1-exact": halting_n1_exact,
    "first-step": first_step,
    "walk-oracle": walk_oracle,
    "pcp-exact": pcp_exact,
    "pcp-mc": pcp_mc,
    "pcp-bound": pcp_bound,
    "threesat-counts": threesat_counts,
    "threesat-eigen": threesat_eigen,
    "threesat-density": threesat_density,
    "avp-levin": avp_levin,
    "avp-separation": avp_separation,
    "markov-bound": markov_bound,
    "stolz-consistency": stolz_consistency,
}
