"""Numerical laboratory for simultaneous expanding interval-map dynamics."""

__version__ = "0.1.0"

from .symbolic import BernoulliSpec, ThetaMetric, Word, cylinder_measure, enumerate_words, theta_distance
from .interval_maps import (
    ExpandingMap,
    MapFamily,
    SkewPoint,
    apply_map,
    apply_word,
    canonical_family,
    ergodic_sum,
    fixed_points,
    inverse_branches,
    skew_apply,
)
from .function_space import CylinderFunction, GridFunction, PotentialSpec, holder_seminorm_estimate, q_lift
from .transfer import (
    KappaSolution,
    SpectralData,
    TransferMatrix,
    build_collective_operator,
    build_complex_operator,
    build_per_map_operator,
    build_skew_operator,
    equilibrium_measure,
    leading_spectral_data,
    normalize,
    pressure,
    pressure_derivative_check,
    solve_kappa,
    verify_spectrum_match,
)
from .statistics import (
    CltReport,
    CorrelationSeries,
    RandomWordSampler,
    averaged_koopman,
    clt_experiment,
    correlation,
    correlation_series,
    correlation_via_operators,
    decay_rate_fit,
    ergodic_average_check,
    koopman_green_kubo,
    ks_statistic,
    lil_diagnostic,
    normalized_sums,
    variance_along_word,
)
from .recurrence import (
    CountQuery,
    CountResult,
    approximability_diagnostic,
    asymptotic_fit,
    count_periodic,
    predicted_count,
)
