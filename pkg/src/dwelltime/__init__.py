"""Stability analysis and stabilization of linear impulsive and
sampled-data systems under dwell-time constraints.

The package certifies stability through parameter-dependent linear matrix
inequalities reduced to finite semidefinite programs (sum-of-squares or
piecewise-linear discretization), synthesizes state-feedback controllers,
and independently re-checks every answer with brute-force spectral and
simulation oracles.
"""

__version__ = "0.1.0"

from .errors import (
    ConsistencyError,
    DimensionError,
    DwelltimeError,
    EncodingError,
    ExtractionError,
    InputError,
    NumericalFailureError,
)
from .polymat import PolyMat

# fmt: off
_PENDING = """
from .analysis import (
    Certificate,
    DwellSpec,
    ImpulsiveSystem,
    PolytopicSystem,
    exact_min_dwell,
    min_dwell_certificate,
    periodic_certificate,
    periodic_exact,
    ranged_certificate,
    robust_certificate,
    search_min_dwell,
    search_range,
    variable_count,
)
from .synthesis import Controller, SynthesisResult, extract_gain, stabilize_min_dwell, stabilize_periodic
from .sampled_data import (
    PolytopicSampledData,
    SampledDataSystem,
    analyze_fixed,
    lift,
    sampled_search_range,
    synthesize,
)
from .oracle import (
    DwellSequence,
    Trajectory,
    falsify_robust,
    min_dwell_sweep_check,
    simulate,
    spectral_sweep,
    verify_certificate,
)
"""
# fmt: on

__all__ = [name for name in dir() if not name.startswith("_")]
