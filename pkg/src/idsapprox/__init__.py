"""Uniform IDS approximation on Cayley graphs with computable error certificates.

The package computes normalised eigenvalue counting functions of finite-range,
colouring-invariant operators restricted to Folner volumes of Z^d or the
discrete Heisenberg group, together with a fully computable four-term bound
on their supremum distance to the limiting spectral distribution function.
"""

from .cayley import (
    FiniteSet,
    FreeAbelian,
    GroupModel,
    Heisenberg3,
    TilingSpec,
    boundary,
    boundary_ext,
    boundary_int,
    boundary_int_size,
    boundary_size,
    folner_set,
    grid_cover,
    grid_decompose,
    grow,
    interval_folner,
    shrink,
)
from .colouring import (
    Alphabet,
    Colouring,
    EmpiricalFrequencies,
    ExplicitColouring,
    FrequencyProvider,
    HalfLineMod3,
    HalfLineMod3Window,
    Pattern,
    PatternClass,
    PercolationColouring,
    PercolationFrequencies,
    PeriodicFoldColouring,
    TrivialColouring,
    TrivialFrequencies,
    canonicalize,
    count_occurrences,
    empirical_frequency,
    frequency_deviation,
    occurring_pattern_spectrum,
    restrict,
    translate_pattern,
)
from .ergodic import (
    AlmostAdditive,
    StepFunction,
    check_almost_additive,
    delta_estimate,
    ergodic_average,
    frequency_approximant,
    limit_certificates,
    measured_delta,
    sup_distance,
)
from .ids import (
    ErrorCertificate,
    IdsApproximant,
    JumpReport,
    TestFunction,
    continuity_gap,
    eigenvalue_count_function,
    frequency_side_ids,
    ids_approximant,
    ids_certificate,
    jump_lower_bound,
    raw_counting_distribution,
    spectrum_support_diagnostic,
)
from .operators import (
    LocalRule,
    PeriodicCover,
    RestrictedMatrix,
    adjacency_rule,
    check_invariance,
    laplacian_rule,
    norm_bound,
    offset_table_rule,
    percolation_rule,
    periodic_fold,
    restrict_operator,
)
from .spectra import (
    EigenvalueList,
    counting_function,
    eigenvalues,
    projection_truncation_gap,
    quasi_mode_count,
    rank_perturbation_gap,
    spectral_shift_integral,
)

__version__ = "0.1.0"
