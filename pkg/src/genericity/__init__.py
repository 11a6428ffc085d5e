"""Generic-case complexity experiments: densities, partial algorithms and
their halting sets for the halting problem, PCP and 3-SAT, and the
comparison with average-case complexity."""

from .density import (
    Answer,
    FrequencyPoint,
    FrequencySeries,
    Geometry,
    Mode,
    PartialVerdict,
    SizedDomain,
    classify_convergence,
    conditional_ensemble,
    frequency,
    frequency_series,
    generic_time_report,
    spherical_vs_volume,
)

__all__ = [
    "Answer",
    "FrequencyPoint",
    "FrequencySeries",
    "Geometry",
    "Mode",
    "PartialVerdict",
    "SizedDomain",
    "classify_convergence",
    "conditional_ensemble",
    "frequency",
    "frequency_series",
    "generic_time_report",
    "spherical_vs_volume",
]
